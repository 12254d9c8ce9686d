#!/usr/bin/env python3
"""Worked examples, end to end: ergodic projections, envelopes, boundaries.

Runs the library on the small systems whose answers are known in closed
form and prints one summary line per case. Takes about half a minute.
"""

import time

import numpy as np

from ellis_envelope import (
    ChannelMap,
    OperatorSubspace,
    cb_norm,
    cb_norm_bracket,
    cesaro_idempotent,
    compute_boundary,
    compute_envelope,
    enumerate_semigroups,
    idempotent_poset,
    transformation_monoid,
)

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def timed(label, fn):
    t0 = time.monotonic()
    summary = fn()
    print(f"{label:<46s} {summary}   [{time.monotonic() - t0:.2f}s]")


def order3_count():
    return f"count={len(enumerate_semigroups(3))}"


def t3_poset():
    t3, _ = transformation_monoid(3)
    poset = idempotent_poset(t3)
    return f"idempotents={len(poset.idempotents)} minimal={len(poset.minimal())}"


def cesaro_half_sz():
    half = ChannelMap.from_superop(
        0.5 * (ChannelMap.identity(2).superop + ChannelMap.conjugation(SZ).superop), 2, 2
    )
    res = cesaro_idempotent(half, mode="both")
    return f"fixed dim={res.fixed_space.dim} agreement={res.agreement:.1e}"


def diagonal_envelope():
    diag2 = OperatorSubspace.from_matrices(
        [np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)]
    )
    env = compute_envelope(diag2, seed=0)
    return f"rank={env.rank} certificate={env.certificate}"


def rigid_envelope():
    res = compute_envelope(OperatorSubspace.from_matrices([I2, SX, SZ]), seed=0)
    return f"rank={res.rank} rigidity={res.rigidity_violation:.1e}"


def corner_envelope():
    space = OperatorSubspace.from_matrices([np.array([[0, 1], [0, 0]], dtype=complex)])
    res = compute_envelope(space, seed=0)
    return f"rank={res.rank} mode={res.mode} certificate={res.certificate}"


def sz_boundary():
    res = compute_boundary(
        OperatorSubspace.from_matrices([I2]), ChannelMap.conjugation(SZ), seed=0
    )
    return f"rank={res.rank} fixed dim={res.fixed_space.dim} certificate={res.certificate}"


def transpose_cb():
    bracket = cb_norm_bracket(ChannelMap.transpose_map(2), tol=1e-3)
    return f"[{bracket.lower:.4f}, {bracket.upper:.4f}] (exact value 2)"


def identity_cb():
    return f"{cb_norm(ChannelMap.identity(2)):.4f}"


def main() -> None:
    timed("semigroups of order 3", order3_count)
    timed("T_3 idempotent poset", t3_poset)
    timed("Cesaro idempotent of (id + conj sz)/2", cesaro_half_sz)
    timed("envelope of the diagonal system in M_2", diagonal_envelope)
    timed("envelope of span{I, sx, sz} (rigid)", rigid_envelope)
    timed("envelope of span{E_12} via corner lift", corner_envelope)
    timed("boundary of conj sz relative to span{I}", sz_boundary)
    timed("cb norm of the transpose on M_2", transpose_cb)
    timed("cb norm of the identity (CP path)", identity_cb)


if __name__ == "__main__":
    main()
