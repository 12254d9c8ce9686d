"""Fixed spaces of unital channels and the idempotents absorbed by them.

For a unital CP map phi, the members of {theta UCP : phi . theta = theta,
theta(x) = x on E} form a compact convex semigroup whose idempotents have
ranges inside the fixed space F_phi; the Cesaro idempotent of phi itself
belongs to it. A minimal idempotent there carries the boundary structure:
its range together with the multiplication x . y = e(x y) is the
noncommutative Poisson boundary of phi relative to E, and the inclusion of
E in it is rigid.

Normality hypotheses on phi are vacuous at matrix scale; nothing is imposed.
No bidual construction is attempted (the bidual of B(H) is not injective,
so the infinite-dimensional theory does not reduce to this artifact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    ChannelMap,
    _require_unital_cp,
    cesaro_idempotent,
    check_absorption,
    compose,
)
from .envelope import (
    ChoiEffrosTable,
    choi_effros_table,
    descend_to_minimal,
    probe_minimality,
)
from .linalg import SubspaceBasis, frobenius, matrix_to_json
from .spectrahedron import FeasibleSet, OperatorSubspace, build_system_set


def build_T_set(space: OperatorSubspace, phi: ChannelMap, fix_tol: float = 1e-8) -> FeasibleSet:
    """Feasible set {theta UCP : phi . theta = theta, theta fixes ``space``}.

    Requires every basis element of the space to be fixed by ``phi``; members
    fix the space pointwise, so a violation would make the set empty (theta
    fixing x forces phi(x) = phi(theta(x)) = theta(x) = x).
    """
    _require_unital_cp(phi, "build_T_set")
    if phi.dim_in != space.ambient:
        raise ValueError("build_T_set: channel and space have different ambient dimensions")
    for k, x in enumerate(space.basis.mats):
        res = frobenius(phi.apply(x) - x)
        if res > fix_tol:
            raise ValueError(
                f"build_T_set: basis element {k} is not fixed by the channel "
                f"(residual {res:.3e} > {fix_tol:.1e})"
            )
    return build_system_set(space, absorb=phi)


def tau_absorb(theta: ChannelMap, phi: ChannelMap) -> ChannelMap:
    """Ergodic absorption: compose the Cesaro idempotent of phi after theta.

    The result is absorbed by phi (phi . out = out) and agrees with theta on
    everything theta sends into the fixed space of phi. This is how raw
    probe maps are pushed into the absorbed semigroup before testing.
    """
    e = cesaro_idempotent(phi).idempotent
    return compose(e, theta)


@dataclass(frozen=True)
class BoundaryResult:
    """Minimal absorbed idempotent of a channel over a fixed subspace.

    ``residuals`` carries the three defining checks: the boundary basis
    lies in F_phi ("range_in_fixed"), the idempotent is absorbed by the
    channel ("absorbed"), and the space is fixed by the channel
    ("space_in_fixed"). ``absorption_violation`` is max_k ||e phi^k e - e||
    for k up to 20.
    """

    channel: ChannelMap
    space: OperatorSubspace
    fixed_space: SubspaceBasis
    idempotent: ChannelMap
    boundary_space: SubspaceBasis
    choi_effros: ChoiEffrosTable
    rigidity_violation: float
    absorption_violation: float
    certificate: str
    descent_trace: tuple[tuple[int, int, float], ...]
    residuals: dict[str, float]
    seed: int
    tol: float

    @property
    def rank(self) -> int:
        return self.boundary_space.dim

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "fixed_space_dim": self.fixed_space.dim,
            "certificate": self.certificate,
            "rigidity_violation": float(self.rigidity_violation),
            "absorption_violation": float(self.absorption_violation),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "idempotent": self.idempotent.to_json(),
            "boundary_basis": [matrix_to_json(m) for m in self.boundary_space.mats],
            "fixed_basis": [matrix_to_json(m) for m in self.fixed_space.mats],
            "descent_trace": [[it, rk, float(res)] for it, rk, res in self.descent_trace],
            "choi_effros": self.choi_effros.to_json(),
            "seed": self.seed,
            "tol": self.tol,
        }


def compute_boundary(
    space: OperatorSubspace,
    phi: ChannelMap,
    seed: int = 0,
    tol: float = 1e-6,
    budget: int = 200,
    n_samples: int = 32,
    ascent_starts: int = 1,
    ascent_steps: int = 12,
) -> BoundaryResult:
    """Minimal idempotent of the absorbed semigroup, with certificates.

    Starts the descent at the Cesaro idempotent of the channel (always a
    member). The rigidity probe follows the two-step extension device: raw
    probes are drawn from the plain system set of ``space`` (no absorption
    constraint), pushed into the absorbed semigroup by ergodic absorption,
    and only then tested against e . theta . e = e.
    """
    tset = build_T_set(space, phi)
    ergodic = cesaro_idempotent(phi)
    e0 = ergodic.idempotent
    des = descend_to_minimal(
        tset,
        e0,
        tol=tol,
        budget=budget,
        seed=seed,
        n_samples=n_samples,
        ascent_starts=ascent_starts,
        ascent_steps=ascent_steps,
    )
    e = des.idempotent
    boundary = e.range_basis()
    f_phi = ergodic.fixed_space
    plain = build_system_set(space)
    rigidity = probe_minimality(
        e,
        plain,
        n_samples=n_samples,
        seed=seed + 104_729,
        ascent_starts=ascent_starts,
        ascent_steps=ascent_steps,
        transform=lambda t: compose(e0, t),
    )[0][0]
    residuals = {
        "range_in_fixed": max(f_phi.distance(m) for m in boundary.mats),
        "absorbed": frobenius(phi.superop @ e.superop - e.superop),
        "space_in_fixed": max(
            frobenius(phi.apply(x) - x) for x in space.basis.mats
        ),
        "membership": tset.membership(e).worst,
    }
    return BoundaryResult(
        channel=phi,
        space=space,
        fixed_space=f_phi,
        idempotent=e,
        boundary_space=boundary,
        choi_effros=choi_effros_table(e, boundary),
        rigidity_violation=rigidity,
        absorption_violation=check_absorption(e, phi),
        certificate=des.certificate,
        descent_trace=des.trace,
        residuals=residuals,
        seed=seed,
        tol=tol,
    )
