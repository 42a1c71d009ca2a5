#!/usr/bin/env python3
"""Regenerates the model, config and trajectory fixtures under data/."""

import json
import math
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"
IDENTITY = [1.0, 0.0, 0.0, 0.0]


def revolute(name, parent, child, p, axis, lo=-2.8, hi=2.8, v=1.5, a=15.0):
    return {
        "name": name, "kind": "revolute", "parent": parent, "child": child,
        "origin": {"p": p, "q": IDENTITY}, "axis": axis,
        "limits": {"q": [lo, hi], "v": v, "a": a},
    }


def planar_chain(name, lengths):
    joints, parent, prev = [], "base", 0.0
    for i, length in enumerate(lengths, start=1):
        child = f"link{i}"
        joints.append(revolute(f"j{i}", parent, child, [prev, 0.0, 0.0], [0.0, 0.0, 1.0]))
        parent, prev = child, length
    return {"name": name, "joints": joints,
            "gripper": {"link": parent, "offset": {"p": [prev, 0.0, 0.0], "q": IDENTITY}}}


def arm7():
    z, y = [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]
    layout = [  # (origin, axis, lo, hi, vmax)
        ([0.0, 0.0, 0.333], z, -2.8, 2.8, 2.1),
        ([0.0, 0.0, 0.0], y, -1.7, 1.7, 2.1),
        ([0.0, 0.0, 0.316], z, -2.8, 2.8, 2.1),
        ([0.0825, 0.0, 0.0], y, -3.0, -0.07, 2.1),
        ([-0.0825, 0.0, 0.384], z, -2.8, 2.8, 2.6),
        ([0.0, 0.0, 0.0], y, -0.01, 3.7, 2.6),
        ([0.088, 0.0, 0.0], z, -2.8, 2.8, 2.6),
    ]
    joints, parent = [], "base"
    for i, (p, axis, lo, hi, v) in enumerate(layout, start=1):
        child = f"link{i}"
        joints.append(revolute(f"j{i}", parent, child, p, axis, lo, hi, v, 15.0))
        parent = child
    return {"name": "arm7", "joints": joints,
            "gripper": {"link": parent, "offset": {"p": [0.0, 0.0, 0.107], "q": IDENTITY}}}


def planar_base():
    y = [0.0, 1.0, 0.0]
    return {
        "name": "planar_base",
        "joints": [
            {"name": "base", "kind": "planar", "parent": "world", "child": "chassis",
             "limits": {"q": [-5.0, 5.0], "v": 1.0, "a": 5.0}},
            revolute("shoulder", "chassis", "upper", [0.1, 0.0, 0.4], y, -3.0, 3.0, 2.0, 20.0),
            revolute("elbow", "upper", "fore", [0.3, 0.0, 0.0], y, -3.0, 3.0, 2.0, 20.0),
        ],
        "gripper": {"link": "fore", "offset": {"p": [0.25, 0.0, 0.0], "q": IDENTITY}},
    }


def floating_base():
    return {
        "name": "floating_base",
        "joints": [
            {"name": "root", "kind": "floating", "parent": "world", "child": "torso",
             "origin": {"p": [0.0, 0.0, 0.8], "q": IDENTITY},
             "limits": {"q": [-2.0, 2.0], "v": 1.0, "a": 5.0}},
            revolute("waist", "torso", "chest", [0.0, 0.0, 0.2], [0.0, 0.0, 1.0], -3.0, 3.0, 2.0, 20.0),
            revolute("shoulder", "chest", "arm", [0.0, 0.2, 0.1], [0.0, 1.0, 0.0], -3.0, 3.0, 2.0, 20.0),
            {"name": "slide", "kind": "prismatic", "parent": "arm", "child": "fore",
             "origin": {"p": [0.3, 0.0, 0.0], "q": IDENTITY}, "axis": [1.0, 0.0, 0.0],
             "limits": {"q": [0.0, 0.2], "v": 0.5, "a": 5.0}},
        ],
        "gripper": {"link": "fore", "offset": {"p": [0.1, 0.0, 0.0], "q": IDENTITY}},
    }


def quat_z(angle):
    return [math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2)]


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return [aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw]


def sample(t, p, q=IDENTITY, grasp=0):
    return json.dumps({"t": t, "p": p, "q": q, "grasp": grasp})


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines))


def planar_fk(lengths, q):
    x = y = angle = 0.0
    for length, qi in zip(lengths, q):
        angle += qi
        x += length * math.cos(angle)
        y += length * math.sin(angle)
    return [x, y, 0.0], quat_z(angle)


def main():
    models = DATA / "models"
    configs = DATA / "configs"
    trajs = DATA / "trajectories"
    for d in (models, configs, trajs):
        d.mkdir(parents=True, exist_ok=True)

    for name, doc in {
        "two_link": planar_chain("two_link", [0.5, 0.4]),
        "planar3": planar_chain("planar3", [0.4, 0.3, 0.2]),
        "arm7": arm7(),
        "planar_base": planar_base(),
        "floating_base": floating_base(),
    }.items():
        (models / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")

    circle_q0 = [-0.2, 1.2, -1.0]
    (configs / "circle.json").write_text(json.dumps(
        {"policy_rate": 10, "ik_rate": 100, "k_grip": 10, "q0": circle_q0}, indent=2) + "\n")
    (configs / "circle_latency.json").write_text(json.dumps(
        {"policy_rate": 10, "ik_rate": 100, "k_grip": 10, "q0": circle_q0,
         "latency": {"tau": 0.05, "delay": 5}}, indent=2) + "\n")
    stationary_q0 = [0.3, -0.7, 0.4]
    (configs / "stationary.json").write_text(json.dumps(
        {"policy_rate": 10, "ik_rate": 100, "q0": stationary_q0}, indent=2) + "\n")
    (configs / "wall.json").write_text(json.dumps(
        {"q0": circle_q0, "walls": [{"normal": [1.0, 0.0, 0.0], "offset": 1.5}]}, indent=2) + "\n")

    # 0.1 Hz circle of radius 0.1 m about (0.45, 0.15), sampled at 10 Hz for 30 s.
    write_lines(trajs / "circle.jsonl", [
        sample(k / 10, [0.45 + 0.1 * math.cos(2 * math.pi * 0.1 * k / 10),
                        0.15 + 0.1 * math.sin(2 * math.pi * 0.1 * k / 10), 0.0])
        for k in range(300)])

    p, q = planar_fk([0.4, 0.3, 0.2], stationary_q0)
    write_lines(trajs / "stationary.jsonl", [sample(k / 10, p, q) for k in range(20)])

    write_lines(trajs / "line.jsonl", [sample(k / 8, [0.25 + k / 8, -0.5, 0.75]) for k in range(16)])

    lpath = [[k / 8, 0.0, 0.0] for k in range(9)] + [[1.0, k / 8, 0.0] for k in range(1, 9)]
    write_lines(trajs / "lpath.jsonl", [sample(k / 8, p) for k, p in enumerate(lpath)])

    # Accelerating helix with a growing twist: not symmetric under time reversal.
    asym = []
    for k in range(40):
        s = 0.02 * k + 0.002 * k * k
        twist = quat_mul(quat_z(0.6 * s), [math.cos(0.05 * k), math.sin(0.05 * k), 0.0, 0.0])
        asym.append(sample(k / 10, [0.3 * math.cos(3 * s), 0.3 * math.sin(3 * s), 0.1 * s], twist, int(k >= 25)))
    write_lines(trajs / "asymmetric.jsonl", asym)

    malformed = [sample(k / 8, [0.25 + k / 8, -0.5, 0.75]) for k in range(10)]
    malformed[6] = '{"t": 0.75, "p": [1.0, -0.5], "q": [1, 0, 0, 0], "grasp": 0}'
    write_lines(trajs / "malformed_line7.jsonl", malformed)

    # Loss episode: ten history poses moving along x, then one step that turns
    # toward y while closing the gripper.
    episode = [sample(k / 10, [0.1 * k, 0.0, 0.5]) for k in range(10)]
    episode.append(sample(1.0, [0.9, 0.1, 0.5], IDENTITY, 1))
    write_lines(trajs / "episode.jsonl", episode)

    modes = []
    for k in range(5):
        modes.append({"logit": [0.5, 0.0, -0.5, -1.0, -1.5][k],
                      "mean": [0.1 * math.cos(k), 0.1 * math.sin(k), 0.0, 0.0, 0.0, 0.0],
                      "std": [0.05, 0.05, 0.01, 0.02, 0.02, 0.02]})
    (configs / "loss_params.json").write_text(json.dumps(
        {"modes": modes, "grasp_logit": 1.5, "predicted": [0.1, 0.0, 0.0, 0.0, 0.0, 0.0]}, indent=2) + "\n")


if __name__ == "__main__":
    main()
