"""
Catalog Models
==============

Inertial star catalog: stars with unit directions and visual magnitudes.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator
from scipy.spatial import cKDTree

from src.core.exceptions import DuplicateStarError

UNIT_TOLERANCE = 1e-12


class CatalogStar(BaseModel):
    """One catalog entry"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: int = Field(..., description="Star identifier, unique within a catalog")
    direction: np.ndarray = Field(..., description="Unit direction in the inertial frame")
    magnitude: float = Field(..., description="Visual magnitude (smaller is brighter)")

    @field_validator("direction", mode="before")
    @classmethod
    def validate_direction(cls, v) -> np.ndarray:
        d = np.array(v, dtype=np.float64).reshape(-1)
        n = np.linalg.norm(d)
        if d.shape != (3,) or not np.isfinite(n) or n == 0.0:
            raise ValueError(f"direction must be a non-zero 3-vector, got {v!r}")
        if abs(n - 1.0) > UNIT_TOLERANCE:
            d = d / n
        d.setflags(write=False)
        return d


class StarCatalog(BaseModel):
    """
    Ordered list of catalog stars with array views and a spatial index.

    Stars are kept in strictly increasing id order. Arrays (``ids``,
    ``directions``, ``magnitudes``) share that order.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    stars: List[CatalogStar] = Field(default_factory=list, description="Stars in id order")
    source: Optional[str] = Field(None, description="File or generator the catalog came from")

    _ids: np.ndarray = PrivateAttr()
    _directions: np.ndarray = PrivateAttr()
    _magnitudes: np.ndarray = PrivateAttr()
    _tree: Optional[cKDTree] = PrivateAttr(default=None)

    def __init__(self, stars=(), source: Optional[str] = None):
        ordered = sorted(stars, key=lambda s: s.id)
        for a, b in zip(ordered, ordered[1:]):
            if a.id == b.id:
                raise DuplicateStarError(f"duplicate star id {a.id}")
        super().__init__(stars=ordered, source=source)

    def model_post_init(self, __context) -> None:
        n = len(self.stars)
        self._ids = np.array([s.id for s in self.stars], dtype=np.int64)
        self._directions = (
            np.array([s.direction for s in self.stars], dtype=np.float64).reshape(n, 3)
        )
        self._magnitudes = np.array([s.magnitude for s in self.stars], dtype=np.float64)
        for arr in (self._ids, self._directions, self._magnitudes):
            arr.setflags(write=False)
        self._tree = cKDTree(self._directions) if n else None

    @classmethod
    def from_arrays(cls, ids, directions, magnitudes, source: Optional[str] = None) -> "StarCatalog":
        stars = [
            CatalogStar(id=int(i), direction=d, magnitude=float(m))
            for i, d, m in zip(ids, np.asarray(directions), magnitudes)
        ]
        return cls(stars=stars, source=source)

    def __len__(self) -> int:
        return len(self.stars)

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def directions(self) -> np.ndarray:
        return self._directions

    @property
    def magnitudes(self) -> np.ndarray:
        return self._magnitudes

    @property
    def tree(self) -> Optional[cKDTree]:
        return self._tree

    def index_of(self, star_id: int) -> int:
        """Row of ``star_id``; raises KeyError when absent"""
        pos = int(np.searchsorted(self._ids, star_id))
        if pos >= len(self._ids) or self._ids[pos] != star_id:
            raise KeyError(star_id)
        return pos
