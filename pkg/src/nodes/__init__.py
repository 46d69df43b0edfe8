"""LangGraph nodes of the tracking pipeline"""

from src.nodes.frames_node import frames_node
from src.nodes.star_id_node import star_id_node
from src.nodes.registration_node import registration_node
from src.nodes.averaging_node import averaging_node
from src.nodes.bundle_node import bundle_node

__all__ = [
    "frames_node",
    "star_id_node",
    "registration_node",
    "averaging_node",
    "bundle_node",
]
