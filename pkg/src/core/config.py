"""
ESTA Configuration Management
=============================

Pydantic configuration with defaults that reproduce the reference experiment
(240x180 sensor, 20 deg field of view, 45 s at 4 deg/s, 40 ms windows).

Values come from, in increasing priority:
1. Model defaults
2. A YAML file (``config/esta.yaml`` ships every default)
3. ``section.key=value`` overrides (``--set`` on the command line)
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.core.constants import BUNDLE_ANCHORS, LOG_LEVELS, POINT_MODES
from src.core.exceptions import ConfigError

logger = logging.getLogger(__name__)


# ==================== CONFIGURATION MODELS ====================

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SimulationConfig(_Section):
    """Synthetic event-camera recording of a rotating star field"""
    width: int = Field(240, gt=0, description="Sensor width in pixels")
    height: int = Field(180, gt=0, description="Sensor height in pixels")
    fov_deg: float = Field(20.0, gt=0.0, lt=180.0, description="Horizontal field of view")
    duration_s: float = Field(45.0, gt=0.0, description="Recording duration")
    angular_speed_dps: float = Field(4.0, ge=0.0, description="Constant angular speed (deg/s)")
    axis: List[float] = Field(
        default_factory=lambda: [0.2, 1.0, 0.1],
        description="Rotation axis in the camera frame (normalized on use)"
    )
    initial_attitude: Optional[List[float]] = Field(
        None,
        description="Initial attitude quaternion (w, x, y, z); drawn from the seed when omitted"
    )
    substep_ms: float = Field(1.0, gt=0.0, description="Simulation substep")
    block_s: float = Field(1.0, gt=0.0, description="Span of one star-visibility query block")
    rate_ref: float = Field(2000.0, ge=0.0, description="Star event rate (ev/s) at mag_ref and full speed")
    mag_ref: float = Field(4.0, description="Reference magnitude of the star rate model")
    speed_ref_px_s: float = Field(20.0, gt=0.0, description="Image speed at which the star rate saturates")
    mag_limit: float = Field(6.5, description="Faintest magnitude rendered")
    jitter_px: float = Field(0.5, ge=0.0, description="Gaussian jitter of star events (pixels)")
    noise_rate: float = Field(0.1, ge=0.0, description="Spurious events per pixel per second")
    hot_pixel_count: int = Field(5, ge=0, description="Number of hot pixels")
    hot_pixel_rate: float = Field(20.0, ge=0.0, description="Events per second of each hot pixel")

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v: List[float]) -> List[float]:
        """Axis must be a non-zero 3-vector"""
        if len(v) != 3:
            raise ValueError(f"axis needs 3 components, got {len(v)}")
        if sum(c * c for c in v) <= 0.0:
            raise ValueError("axis must be non-zero")
        return v

    @field_validator("initial_attitude")
    @classmethod
    def validate_initial_attitude(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        """Quaternion must have 4 components and non-zero norm"""
        if v is None:
            return v
        if len(v) != 4 or sum(c * c for c in v) <= 0.0:
            raise ValueError("initial_attitude must be a non-zero quaternion (w, x, y, z)")
        return v


SimConfig = SimulationConfig


class CameraConfig(_Section):
    """Camera intrinsics; unset focal lengths are derived from the simulated field of view"""
    fx: Optional[float] = Field(None, gt=0.0, description="Focal length x (pixels)")
    fy: Optional[float] = Field(None, gt=0.0, description="Focal length y (pixels)")
    cx: Optional[float] = Field(None, description="Principal point x (pixels)")
    cy: Optional[float] = Field(None, description="Principal point y (pixels)")
    skew: float = Field(0.0, description="Skew (pixels)")
    intrinsics_path: Optional[Path] = Field(None, description="Intrinsics file (fx,fy,cx,cy,skew)")


class CatalogConfig(_Section):
    """Star catalog source"""
    path: Optional[Path] = Field(None, description="Catalog file; synthetic when omitted")
    n_stars: int = Field(5000, gt=0, description="Synthetic catalog size")
    mag_min: float = Field(0.0, description="Brightest synthetic magnitude")
    mag_max: float = Field(6.5, description="Faintest synthetic magnitude")
    mag_slope: float = Field(0.45, gt=0.0, description="Magnitude density slope (dN ~ 10^(slope m))")


class FramesConfig(_Section):
    """Event-image formation, frame selection and point extraction"""
    integration_ms: float = Field(40.0, gt=0.0, description="Window length")
    eps1: float = Field(2.0, gt=0.0, description="Filtered-intensity threshold")
    eps2: int = Field(50, ge=0, description="Minimum active pixel count for star identification")
    points: str = Field("centroids", description="Point extraction mode")
    dump_pgm: bool = Field(False, description="Write one PGM per event image")
    dump_points: bool = Field(False, description="Write extracted point sets")

    @field_validator("points")
    @classmethod
    def validate_points(cls, v: str) -> str:
        if v not in POINT_MODES:
            raise ValueError(f"points must be one of {POINT_MODES}")
        return v


class StarIdConfig(_Section):
    """Triangle-hash star identification"""
    quantization_deg: float = Field(0.2, gt=0.0, description="Descriptor bin width")
    stars_per_cone: int = Field(12, ge=3, description="Brightest stars kept per half-FOV cone")
    mag_limit: float = Field(6.0, description="Faintest magnitude indexed and verified")
    n_brightest: int = Field(8, ge=3, description="Image points used to form triangles")
    verify_radius_px: float = Field(2.0, gt=0.0, description="Verification match radius")
    min_matches: int = Field(4, ge=3, description="Minimum verified matches")
    max_false_match_probability: float = Field(
        1e-6, gt=0.0, le=1.0,
        description="Largest accepted chance probability of the verified extra matches"
    )
    early_exit_probability: float = Field(
        1e-12, gt=0.0, le=1.0, description="Stop searching once a hypothesis is this decisive"
    )
    max_hypotheses: int = Field(20000, gt=0, description="Most hypotheses verified per frame")


class RegistrationConfig(_Section):
    """Trimmed ICP between temporally close frames"""
    window: int = Field(5, ge=1, description="Largest frame gap W paired")
    trim_fraction: float = Field(0.7, gt=0.0, le=1.0, description="Fraction tau of residuals kept")
    max_iterations: int = Field(50, gt=0, description="ICP iteration cap")
    tolerance_rad: float = Field(1e-6, gt=0.0, description="Rotation-update convergence threshold")
    max_rms_residual_px: float = Field(1.5, gt=0.0, description="Reject pairs above this trimmed RMS")


class AveragingConfig(_Section):
    """Augmented rotation averaging"""
    alpha: float = Field(1.0, gt=0.0, description="Weight of absolute rotations")
    huber_delta: float = Field(0.1, gt=0.0, description="Huber threshold on chordal residuals")
    max_iterations: int = Field(200, gt=0, description="IRLS iteration cap")
    tolerance_rad: float = Field(1e-8, gt=0.0, description="Largest per-node update at convergence")


class BundleConfig(_Section):
    """Rotation-only bundle adjustment"""
    enabled: bool = Field(True, description="Run bundle adjustment")
    max_iterations: int = Field(100, gt=0, description="Levenberg-Marquardt iteration cap")
    function_tolerance: float = Field(1e-10, gt=0.0, description="Relative cost decrease threshold")
    gradient_tolerance: float = Field(1e-10, gt=0.0, description="Gradient norm threshold")
    initial_lambda: float = Field(1e-3, gt=0.0, description="Initial Marquardt damping")
    anchor: str = Field(
        "first", description="Gauge: first frame, absolute-rotation priors (first frame without them), or free"
    )
    min_track_length: int = Field(2, ge=2, description="Shortest track entering the adjustment")
    prior_weight: float = Field(
        1.0, ge=0.0, description="Weight of the absolute rotations of identified frames, 0 disables them"
    )
    huber_delta: Optional[float] = Field(
        5e-3, gt=0.0, description="Huber threshold on ray residual norms (rad), null for plain least squares"
    )

    @field_validator("anchor")
    @classmethod
    def validate_anchor(cls, v: str) -> str:
        if v not in BUNDLE_ANCHORS:
            raise ValueError(f"anchor must be one of {BUNDLE_ANCHORS}")
        return v


class OutputConfig(_Section):
    """Where results go"""
    dir: Path = Field(Path("runs/default"), description="Output directory")
    write_debug: bool = Field(False, description="Write per-frame debug dumps")


class EstaConfig(_Section):
    """Main ESTA configuration"""
    # System
    environment: str = Field("development", description="Environment")
    log_level: str = Field("INFO", description="Logging level")
    seed: int = Field(0, ge=0, description="Seed of every random stream")

    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    camera: CameraConfig = Field(default_factory=CameraConfig)
    catalog: CatalogConfig = Field(default_factory=CatalogConfig)
    frames: FramesConfig = Field(default_factory=FramesConfig)
    star_id: StarIdConfig = Field(default_factory=StarIdConfig)
    registration: RegistrationConfig = Field(default_factory=RegistrationConfig)
    averaging: AveragingConfig = Field(default_factory=AveragingConfig)
    bundle: BundleConfig = Field(default_factory=BundleConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level against known levels"""
        v = v.upper()
        if v not in LOG_LEVELS:
            raise ValueError(f"Invalid log_level '{v}'. Must be one of: {LOG_LEVELS}")
        return v

    def echo(self) -> Dict[str, Any]:
        """Complete effective configuration, JSON-serializable"""
        return self.model_dump(mode="json")


# ==================== LOADING ====================

def _raise_config_error(exc: ValidationError) -> None:
    first = exc.errors()[0]
    field = ".".join(str(p) for p in first.get("loc", ()))
    raise ConfigError(first.get("msg", str(exc)), field=field or None) from exc


def _apply_override(data: Dict[str, Any], assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' is not of the form section.key=value")
    key, raw = assignment.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"override '{assignment}' has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value '{raw}'", field=key) from e
    node = data
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"'{part}' is not a section", field=key)
        node = child
    node[path[-1]] = value


def build_config(
    data: Optional[Dict[str, Any]] = None,
    overrides: Iterable[str] = ()
) -> EstaConfig:
    """
    Validate a raw mapping plus overrides into an EstaConfig.

    Raises:
        ConfigError: naming the first invalid field
    """
    merged: Dict[str, Any] = dict(data or {})
    for assignment in overrides:
        _apply_override(merged, assignment)
    try:
        return EstaConfig.model_validate(merged)
    except ValidationError as e:
        _raise_config_error(e)
        raise  # unreachable


def load_config(path: Optional[Path] = None, overrides: Iterable[str] = ()) -> EstaConfig:
    """
    Load configuration from YAML (optional) and apply overrides.

    Args:
        path: YAML file; ``None`` starts from defaults
        overrides: ``section.key=value`` strings

    Returns:
        Validated EstaConfig (not installed as the global instance)
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path} is not valid YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping at top level")
    return build_config(data, overrides)


# ==================== CONFIGURATION INSTANCE ====================

_config: Optional[EstaConfig] = None


def get_config() -> EstaConfig:
    """
    Get global configuration instance (singleton pattern).

    Example:
        config = get_config()
        config.registration.window = 3

    Returns:
        EstaConfig instance
    """
    global _config

    if _config is None:
        _config = EstaConfig()
        logger.debug("Configuration initialized with defaults")

    return _config


def set_config(config: EstaConfig) -> None:
    """
    Set global configuration instance.

    Args:
        config: EstaConfig instance to use
    """
    global _config
    _config = config
    logger.debug("Configuration updated")


def reset_config() -> None:
    """Drop the global instance so the next ``get_config()`` starts from defaults"""
    global _config
    _config = None


if __name__ == "__main__":
    config = get_config()
    print(yaml.safe_dump(config.echo(), sort_keys=False))
