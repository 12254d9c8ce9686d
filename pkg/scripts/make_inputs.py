#!/usr/bin/env python3
"""Write sample JSON inputs for the ellis-envelope CLI.

Creates channels (pinching, sigma-z conjugation, their average, the cyclic
shift on M_3), operator spaces (diagonals, span{I}, span{E_12}), and Cayley
tables, matching the examples in the README.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from ellis_envelope import CayleyTable, ChannelMap, OperatorSubspace, cyclic_group, left_zero


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dest", default="inputs", help="output directory (default ./inputs)")
    args = ap.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    sz = np.diag([1.0, -1.0]).astype(complex)
    conj_sz = ChannelMap.conjugation(sz)
    half_sz = ChannelMap.from_superop(
        0.5 * (ChannelMap.identity(2).superop + conj_sz.superop), 2, 2
    )
    shift3 = ChannelMap.conjugation(np.roll(np.eye(3), 1, axis=0).astype(complex))

    channels = {
        "channel_pinching_m2.json": ChannelMap.pinching(2),
        "channel_conj_sz.json": conj_sz,
        "channel_half_sz.json": half_sz,
        "channel_shift_m3.json": shift3,
        "channel_trace_state_m2.json": ChannelMap.trace_state(2),
    }
    for name, phi in channels.items():
        (dest / name).write_text(json.dumps(phi.to_json(), indent=2) + "\n")

    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    spaces = {
        "space_diag_m2.json": (OperatorSubspace.from_matrices(
            [np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)]
        ), "system"),
        "space_diag_m3.json": (OperatorSubspace.from_matrices(
            [np.diag(np.eye(3)[i]).astype(complex) for i in range(3)]
        ), "system"),
        "space_span_i_m2.json": (OperatorSubspace.from_matrices([np.eye(2, dtype=complex)]), "system"),
        "space_span_i_m3.json": (OperatorSubspace.from_matrices([np.eye(3, dtype=complex)]), "system"),
        "space_rigid_m2.json": (OperatorSubspace.from_matrices(
            [np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex), sz]
        ), "system"),
        "space_corner_e12.json": (OperatorSubspace.from_matrices([e12]), "space"),
    }
    for name, (space, mode) in spaces.items():
        (dest / name).write_text(json.dumps(space.to_json(mode), indent=2) + "\n")

    tables = {
        "table_cyclic_3.json": cyclic_group(3),
        "table_left_zero_3.json": left_zero(3),
    }
    for name, sg in tables.items():
        (dest / name).write_text(json.dumps(sg.to_json(), indent=2) + "\n")

    names = sorted(list(channels) + list(spaces) + list(tables))
    print(f"wrote {len(names)} files to {dest}/")
    for n in names:
        print(f"  {n}")


if __name__ == "__main__":
    main()
