"""
ESTA Application
================
Tracking pipeline from an event stream to three attitude estimates.
"""

from dotenv import load_dotenv
load_dotenv()

import logging
import time
from typing import Optional

from langgraph.graph import StateGraph, END

from src.core.config import EstaConfig, get_config
from src.core.constants import NODE_NAMES
from src.core.state import TrackingState, create_initial_state
from src.models import EventStream, Intrinsics, StarCatalog

# Import all nodes
from src.nodes.frames_node import frames_node
from src.nodes.star_id_node import star_id_node
from src.nodes.registration_node import registration_node
from src.nodes.averaging_node import averaging_node
from src.nodes.bundle_node import bundle_node

logger = logging.getLogger(__name__)

NODES = {
    "frames": frames_node,
    "star_id": star_id_node,
    "registration": registration_node,
    "averaging": averaging_node,
    "bundle": bundle_node,
}


def route_after(stage: str):
    """Routing function sending the graph to END once a stage has failed"""
    position = NODE_NAMES.index(stage)
    following = NODE_NAMES[position + 1] if position + 1 < len(NODE_NAMES) else END

    def route(state: TrackingState) -> str:
        if state.get("error"):
            return END
        return following

    route.__name__ = f"route_after_{stage}"
    return route


def create_esta_graph():
    """Create the tracking graph."""
    graph = StateGraph(TrackingState)

    for name in NODE_NAMES:
        graph.add_node(name, NODES[name])

    graph.set_entry_point(NODE_NAMES[0])

    for name in NODE_NAMES[:-1]:
        following = NODE_NAMES[NODE_NAMES.index(name) + 1]
        graph.add_conditional_edges(
            name,
            route_after(name),
            {following: following, END: END}
        )
    graph.add_edge(NODE_NAMES[-1], END)

    return graph.compile()


# Create the app
esta_app = create_esta_graph()


def run_tracking(
    events: EventStream,
    catalog: StarCatalog,
    intrinsics: Intrinsics,
    config: Optional[EstaConfig] = None,
) -> TrackingState:
    """
    Run the tracking pipeline on one recording.

    Args:
        events: event stream covering [0, simulation.duration_s)
        catalog: inertial star catalog
        intrinsics: event camera intrinsics
        config: pipeline configuration (process-wide config when omitted)

    Returns:
        Final state; ``error`` and ``failed_stage`` are set when a stage failed

    Example:
        state = run_tracking(events, catalog, default_intrinsics(config.simulation), config)
        state["attitudes_bundle"][0].matrix
    """
    config = config or get_config()
    initial_state = create_initial_state(events, catalog, intrinsics, config)

    started = time.perf_counter()
    final_state = esta_app.invoke(initial_state)
    total = time.perf_counter() - started

    if final_state.get("error"):
        logger.error(f"❌ Tracking stopped: {final_state['error']}")
    else:
        logger.info(f"✅ Tracking complete in {total:.2f}s")
    return final_state
