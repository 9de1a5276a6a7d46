"""Episode-log aggregation: target distances, rooms found, completion."""

import numpy as np

from .world import subtask_target


def episode_metrics(log) -> dict:
    """Pure aggregation over an EpisodeLog.

    distance_to_target[r][k] uses robot r's *decoded* sub-task at tick k to
    resolve its current target; rooms_found counts registered switches (each
    one unlocks the next room); completion follows the world's done flag, with
    the tick of first completion reported.
    """
    n = log.n_robots
    distances = [[] for _ in range(n)]
    rooms_found = 0
    completion_tick = None
    goals_reached = 0.0
    for rec in log.records:
        world = rec.world
        rooms_found = max(rooms_found, sum(world.switches_registered))
        for r in range(n):
            label = rec.decoded_subtasks[r]
            _, sep, state = label.partition(": ")
            target = subtask_target(world, state if sep else label, r)
            if target is None:
                distances[r].append(float("nan"))
            else:
                distances[r].append(float(np.linalg.norm(
                    world.positions[r] - np.asarray(target))))
        if world.done and completion_tick is None:
            completion_tick = rec.tick
    if log.records:
        last = log.records[-1].world
        lay = last.layout
        if lay.goals:
            goals_reached = float(np.mean([
                np.linalg.norm(last.positions[r] - np.asarray(lay.goals[r]))
                <= lay.goal_radius for r in range(n)]))
    return {
        "distance_to_target": distances,
        "rooms_found": rooms_found,
        "completed": completion_tick is not None,
        "completion_tick": completion_tick,
        "goals_reached": goals_reached,
    }
