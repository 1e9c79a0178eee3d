#!/usr/bin/env python3
"""Convert RIDI sequences to the recording CSV layout read by `dae`.

Input: the unpacked dataset root, one directory per sequence holding
processed/data.csv with columns time (ns), gyro_*, acce_* and the
visual-inertial pose ori_w, ori_x, ori_y, ori_z.

Output: <out>/{train,test}/<placement>/<sequence>.csv with columns
t_s,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,q_w,q_x,q_y,q_z where q is the
body -> NED attitude.

The pose world frame is gravity aligned with z up (ENU up to heading), so
NED = [[0,1,0],[1,0,0],[0,0,-1]] * world. The Android accelerometer reads
+g upward at rest, which matches acc = -g R^T e3 in NED without a sign
change. Heading is arbitrary and never scored.

Placement comes from the sequence name: leg -> pocket, handheld -> texting,
body -> body, bag -> bag. Within each placement the sequences are sorted by
name and every fourth one (index % 4 == 3) goes to test.
"""

import argparse
import pathlib
import sys

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

PLACEMENTS = {"leg": "pocket", "handheld": "texting", "body": "body", "bag": "bag"}
ENU_TO_NED = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
HEADER = "t_s,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,q_w,q_x,q_y,q_z"


def placement_of(name):
    for key, placement in PLACEMENTS.items():
        if key in name.lower():
            return placement
    return None


def convert(data_csv):
    d = pd.read_csv(data_csv)
    t = (d["time"].to_numpy(dtype=np.int64) - int(d["time"].iloc[0])) * 1e-9
    gyro = d[["gyro_x", "gyro_y", "gyro_z"]].to_numpy()
    acc = d[["acce_x", "acce_y", "acce_z"]].to_numpy()
    world = Rotation.from_quat(d[["ori_x", "ori_y", "ori_z", "ori_w"]].to_numpy())
    ned = Rotation.from_matrix(ENU_TO_NED) * world
    q = ned.as_quat()  # x, y, z, w
    q[q[:, 3] < 0] *= -1

    keep = np.concatenate(([True], np.diff(t) > 0))
    out = np.column_stack((t, gyro, acc, q[:, 3], q[:, 0], q[:, 1], q[:, 2]))[keep]

    # Angle between the accelerometer and the ground-truth gravity direction,
    # a check on the frame conventions: a few degrees on average for walking.
    g_body = ned[keep].inv().apply([0.0, 0.0, 1.0])
    a = -acc[keep] / np.linalg.norm(acc[keep], axis=1, keepdims=True)
    angle = np.degrees(np.arccos(np.clip(np.sum(a * g_body, axis=1), -1.0, 1.0)))
    return out, float(np.median(angle))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dataset", type=pathlib.Path, help="directory of RIDI sequences")
    parser.add_argument("out", type=pathlib.Path)
    args = parser.parse_args()

    sequences = {}
    for data_csv in sorted(args.dataset.glob("*/processed/data.csv")):
        name = data_csv.parent.parent.name
        placement = placement_of(name)
        if placement is None:
            print(f"skipping {name}: unknown placement", file=sys.stderr)
            continue
        sequences.setdefault(placement, []).append((name, data_csv))

    for placement, items in sorted(sequences.items()):
        for index, (name, data_csv) in enumerate(sorted(items)):
            split = "test" if index % 4 == 3 else "train"
            rows, angle = convert(data_csv)
            target = args.out / split / placement / f"{name}.csv"
            target.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(target, rows, delimiter=",", header=HEADER, comments="", fmt="%.17g")
            print(f"{split:5} {placement:8} {name:28} {len(rows):7} samples, median acc/gt angle {angle:.2f} deg")


if __name__ == "__main__":
    main()
