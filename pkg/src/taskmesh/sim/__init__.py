from .layouts import (DT, MAX_SPEED, ROBOT_RADIUS, Flag, Gate, Layout, Rect,
                      Switch, layout_for, multi_room_layout, retrieve_flag_layout)
from .metrics import episode_metrics
from .world import (EventInstance, RewardSpec, WorldState, comm_graph,
                    inject_event, neighbors, obs_dim, observations, observe,
                    reset, route_direction, sensed_event_bits, shaped_distance,
                    spatial_complete, step, subtask_target)

__all__ = [
    "DT", "MAX_SPEED", "ROBOT_RADIUS", "Flag", "Gate", "Layout", "Rect",
    "Switch", "layout_for", "multi_room_layout", "retrieve_flag_layout",
    "episode_metrics", "EventInstance", "RewardSpec", "WorldState",
    "comm_graph", "inject_event", "neighbors", "obs_dim", "observations",
    "observe", "reset", "route_direction", "sensed_event_bits",
    "shaped_distance", "spatial_complete", "step", "subtask_target",
]
