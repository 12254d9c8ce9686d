"""Injective envelopes as ranges of minimal idempotent channels.

The feasible set of unital CP maps fixing an operator system E is a compact
convex semigroup; minimal idempotents in it exist, and their ranges are the
injective envelopes of E. This module finds one by rank descent: starting
from the ergodic idempotent of a sampled member, it probes the compression
violation sup ||e . theta . e - e|| over members theta, and whenever a
violating theta is found, replaces e by the ergodic idempotent of
e . theta . e, which has strictly smaller rank whenever it differs from e.

Plain operator spaces (not unital or not selfadjoint) are handled through
the two-by-two corner lift: E is embedded off-diagonally into an operator
system in M_{2n}, the system machinery runs there, and the envelope is read
back off the upper-right corner of the minimal idempotent.

Minimality certificates are probe-limited and reported as such: "certified"
means no violation above tolerance was found at the configured probe
strength, not a proof of global minimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    ChannelMap,
    NonConvergenceError,
    _require_unital_cp,
    cesaro_idempotent,
    choi_to_superop,
    compose,
    superop_to_choi,
)
from .linalg import SubspaceBasis, frobenius, matrix_to_json
from .spectrahedron import (
    FeasibleSet,
    OperatorSubspace,
    build_system_set,
    maximize_linear,
    sample,
)

IDEMPOTENT_TOL = 1e-7


# ------------------------------------------------------------------------
# two-by-two corner lift


def paulsen_lift(space: OperatorSubspace) -> OperatorSubspace:
    """Operator system in M_{2n} generated by E placed in the corners.

    Returns span{ [[a I, x], [y*, b I]] : x, y in E }, which is unital and
    selfadjoint by construction. The four blocks are pairwise orthogonal, so
    the dimension is exactly 2 dim(E) + 2.
    """
    n = space.ambient
    gens = [_embed_diag(np.eye(n), 0, n), _embed_diag(np.eye(n), 1, n)]
    for x in space.basis.mats:
        gens.append(_embed_corner(x, n))
        gens.append(_embed_corner(x, n).conj().T)
    return OperatorSubspace.from_matrices(gens)


def _embed_corner(x: np.ndarray, n: int) -> np.ndarray:
    z = np.zeros((2 * n, 2 * n), dtype=complex)
    z[:n, n:] = x
    return z


def _embed_diag(x: np.ndarray, which: int, n: int) -> np.ndarray:
    z = np.zeros((2 * n, 2 * n), dtype=complex)
    blk = slice(n, 2 * n) if which else slice(0, n)
    z[blk, blk] = x
    return z


def lift_map(phi: ChannelMap) -> ChannelMap:
    """Blockwise ampliation of ``phi`` to M_{2n} = M_2(M_n).

    Sends [[A, X], [Y, B]] to [[phi(A), phi(X)], [phi(Y), phi(B)]], i.e.
    id_2 (x) phi. Unital CP exactly when phi is, fixes both block
    projections, and restricts to phi on the upper-right corner; when phi
    fixes E elementwise the ampliation fixes the lifted system, which makes
    it the standard feasibility witness for lifted sets.
    """
    if phi.dim_in != phi.dim_out:
        raise ValueError("lift_map: need a square map")
    n = phi.dim_in
    d = 2 * n
    s = np.zeros((d * d, d * d), dtype=complex)
    for r in range(d):
        for q in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[r, q] = 1.0
            s[:, r * d + q] = _lift_apply(phi, unit).reshape(-1)
    return ChannelMap.from_superop(s, d, d)


def _lift_apply(phi: ChannelMap, z: np.ndarray) -> np.ndarray:
    n = phi.dim_in
    out = np.zeros_like(z)
    out[:n, :n] = phi.apply(z[:n, :n])
    out[n:, n:] = phi.apply(z[n:, n:])
    out[:n, n:] = phi.apply(z[:n, n:])
    out[n:, :n] = phi.apply(z[n:, :n])
    return out


def corner_extract(big: ChannelMap, tol: float = 1e-8) -> ChannelMap:
    """Upper-right corner compression x -> [big([[0, x], [0, 0]])]_{12}.

    ``big`` must fix the two corner projections (automatic for maps fixing a
    lifted system); such maps hold the projections in their multiplicative
    domain, so the image of a corner-supported matrix must stay in that
    corner. Mass appearing outside it means ``big`` does not respect the
    block structure, and that is reported as an error rather than truncated.
    """
    if big.dim_in != big.dim_out or big.dim_in % 2:
        raise ValueError("corner_extract: need a square map on M_{2n}")
    n = big.dim_in // 2
    for which in (0, 1):
        p = _embed_diag(np.eye(n), which, n)
        drift = frobenius(big.apply(p) - p)
        if drift > 1e-6:
            raise ValueError(
                f"corner_extract: map moves corner projection {which} by {drift:.3e}"
            )
    s = np.zeros((n * n, n * n), dtype=complex)
    worst = 0.0
    for r in range(n):
        for q in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[r, q] = 1.0
            z = big.apply(_embed_corner(unit, n))
            block = z[:n, n:]
            rest = z.copy()
            rest[:n, n:] = 0.0
            worst = max(worst, frobenius(rest))
            s[:, r * n + q] = block.reshape(-1)
    if worst > tol:
        raise ValueError(f"corner_extract: corner leakage {worst:.3e} > {tol:.1e}")
    return ChannelMap.from_superop(s, n, n)


# ------------------------------------------------------------------------
# minimality probe and rank descent


def _coordinate_directions(d: int):
    """The d^2 Hermitian coordinate directions of M_d (diagonal, Re, Im)."""
    out = []
    for r in range(d):
        w = np.zeros((d, d), dtype=complex)
        w[r, r] = 1.0
        out.append(w)
    for r in range(d):
        for q in range(r + 1, d):
            w = np.zeros((d, d), dtype=complex)
            w[r, q] = w[q, r] = 1.0 / np.sqrt(2.0)
            out.append(w)
            w = np.zeros((d, d), dtype=complex)
            w[r, q] = 1.0j / np.sqrt(2.0)
            w[q, r] = -1.0j / np.sqrt(2.0)
            out.append(w)
    return out


def _compression_objective(e: ChannelMap, w: np.ndarray) -> np.ndarray:
    """Choi-space objective C with <C, J_theta> = <W, Choi(e.theta.e)>.

    The Choi/superoperator reshuffle is an entry permutation, hence unitary
    for the Frobenius pairing, so the pullback of W through
    theta -> e.theta.e is reshuffle(S_e* reshuffle^-1(W) S_e*).
    """
    n = e.dim_in
    se = e.superop
    mid = se.conj().T @ choi_to_superop(w, n, n) @ se.conj().T
    return superop_to_choi(mid, n, n)


def _violation(e: ChannelMap, theta: ChannelMap) -> float:
    se = e.superop
    return frobenius(se @ theta.superop @ se - se)


def probe_minimality(
    e: ChannelMap,
    fset: FeasibleSet,
    n_samples: int = 32,
    seed: int = 0,
    ascent_starts: int = 1,
    ascent_steps: int = 12,
    transform=None,
    keep: int = 8,
) -> list[tuple[float, ChannelMap]]:
    """Search members theta maximizing ||e . theta . e - e||.

    Two candidate sources: random members, and linear ascent along every
    Hermitian coordinate of Choi(e . theta . e) (the violation is a norm, so
    any coordinate of the compression that can be pushed away from Choi(e)
    witnesses non-minimality). ``transform`` post-processes each candidate
    before evaluation (used for ergodic absorption of boundary probes).
    Returns the ``keep`` worst offenders, sorted by decreasing violation;
    violations are evaluated exactly, so the search being heuristic can only
    weaken the probe, never produce a false violation.
    """
    candidates: list[ChannelMap] = []
    for k in range(n_samples):
        candidates.append(sample(fset, seed + k))
    for idx, w in enumerate(_coordinate_directions(fset.choi_dim)):
        theta, _ = maximize_linear(
            fset,
            _compression_objective(e, w),
            n_starts=ascent_starts,
            seed=seed + 100_000 + 131 * idx,
            ascent_steps=ascent_steps,
        )
        candidates.append(theta)
    if transform is not None:
        candidates = [transform(t) for t in candidates]
    scored = sorted(
        ((_violation(e, t), t) for t in candidates), key=lambda p: -p[0]
    )
    return scored[:keep]


def _member_idempotent(e: ChannelMap, fset: FeasibleSet) -> bool:
    return (
        fset.membership(e, tol=1e-6).ok
        and frobenius(e.superop @ e.superop - e.superop) <= IDEMPOTENT_TOL
    )


def seed_idempotent(theta: ChannelMap, fset: FeasibleSet) -> ChannelMap:
    """Ergodic idempotent of a member, robust to projection-level noise.

    A member produced by Dykstra is only accurate to ~1e-8; when its
    spectrum clusters that close to 1 (near-identity samples from very rigid
    sets), the default fixed-space threshold misreads noise as dynamics.
    Retry with coarser thresholds until the result is a certified idempotent
    member; every rung is checked, so loosening cannot produce a bad seed.
    """
    failures: list[tuple[int, float]] = []
    for k, sv_rtol in enumerate((1e-9, 1e-6, 1e-4)):
        try:
            e = cesaro_idempotent(theta, sv_rtol=sv_rtol).idempotent
        except (ValueError, NonConvergenceError):
            failures.append((k, np.inf))
            continue
        if _member_idempotent(e, fset):
            return e
        failures.append((k, fset.membership(e).worst))
    raise NonConvergenceError(
        "seed_idempotent: no threshold produced an idempotent member", failures
    )


@dataclass(frozen=True)
class DescentResult:
    """Outcome of the rank descent.

    certificate: "certified" (no violation above tol at probe strength),
    "unverified" (probe budget exhausted with violations outstanding), or
    "failed" (the iterate stopped being an idempotent member; indicates a
    numerical breakdown, not a mathematical state).
    """

    idempotent: ChannelMap
    certificate: str
    violation: float
    trace: tuple[tuple[int, int, float], ...]


def descend_to_minimal(
    fset: FeasibleSet,
    e0: ChannelMap,
    tol: float = 1e-6,
    budget: int = 200,
    seed: int = 0,
    n_samples: int = 32,
    ascent_starts: int = 1,
    ascent_steps: int = 12,
    transform=None,
) -> DescentResult:
    """Rank descent from the idempotent member ``e0`` to a minimal one.

    Each round probes for a violating member theta; the ergodic idempotent f
    of e . theta . e satisfies f = e f e, so rank(f) <= rank(e), and equality
    forces f = e. Candidates are therefore accepted only on strict rank
    decrease, which bounds the number of acceptances by the ambient rank and
    prevents cycling; rank-preserving candidates are discarded and the probe
    rerun with fresh seeds. ``budget`` caps the total number of probed
    members across rounds.
    """
    if not _member_idempotent(e0, fset):
        raise ValueError(
            "descend_to_minimal: e0 is not an idempotent member of the set "
            f"(membership worst {fset.membership(e0).worst:.3e}, "
            f"idempotency {frobenius(e0.superop @ e0.superop - e0.superop):.3e})"
        )
    e = e0
    trace: list[tuple[int, int, float]] = [(0, e.rank(), 0.0)]
    probes_used = 0
    round_idx = 0
    last_v = np.inf
    while probes_used < budget:
        found = probe_minimality(
            e,
            fset,
            n_samples=n_samples,
            seed=seed + 7919 * round_idx,
            ascent_starts=ascent_starts,
            ascent_steps=ascent_steps,
            transform=transform,
        )
        probes_used += n_samples + fset.choi_dim**2
        round_idx += 1
        last_v = found[0][0] if found else 0.0
        if last_v <= tol:
            if not _member_idempotent(e, fset):
                return DescentResult(e, "failed", last_v, tuple(trace))
            return DescentResult(e, "certified", last_v, tuple(trace))
        for vk, theta in found:
            if vk <= tol:
                break
            try:
                f = seed_idempotent(compose(e, compose(theta, e)), fset)
            except NonConvergenceError:
                continue
            if f.rank() < e.rank():
                e = f
                trace.append((round_idx, e.rank(), vk))
                break
    return DescentResult(e, "unverified", last_v, tuple(trace))


# ------------------------------------------------------------------------
# multiplication table on the range of an idempotent


@dataclass(frozen=True)
class ChoiEffrosTable:
    """Structure constants of x . y := e(x y) on an orthonormal basis of F.

    For a unital CP idempotent e with range F this is an associative product
    with unit e(I); the residuals measure how far the computed e is from
    that ideal. An associativity residual above 1e-6 flags that e is not an
    idempotent UCP map to tolerance.
    """

    coefficients: np.ndarray
    associativity_residual: float
    unit_residual: float
    closure_residual: float

    @property
    def ok(self) -> bool:
        return self.associativity_residual <= 1e-6

    def to_json(self) -> dict:
        return {
            "coefficients_re": np.round(self.coefficients.real, 14).tolist(),
            "coefficients_im": np.round(self.coefficients.imag, 14).tolist(),
            "associativity_residual": float(self.associativity_residual),
            "unit_residual": float(self.unit_residual),
            "closure_residual": float(self.closure_residual),
        }


def choi_effros_table(e: ChannelMap, f_basis: SubspaceBasis) -> ChoiEffrosTable:
    """Expand x . y = e(x y) over the basis of F = range(e)."""
    _require_unital_cp(e, "choi_effros_table")
    mats = f_basis.mats
    drift = max(frobenius(e.apply(m) - m) for m in mats)
    if drift > 1e-6:
        raise ValueError(
            f"choi_effros_table: basis is not fixed by e (drift {drift:.3e}); "
            "pass the range of e"
        )
    d = len(mats)
    prods = [[e.apply(mats[i] @ mats[j]) for j in range(d)] for i in range(d)]
    c = np.zeros((d, d, d), dtype=complex)
    closure = 0.0
    for i in range(d):
        for j in range(d):
            recon = np.zeros_like(prods[i][j])
            for k in range(d):
                c[i, j, k] = np.trace(mats[k].conj().T @ prods[i][j])
                recon = recon + c[i, j, k] * mats[k]
            closure = max(closure, frobenius(prods[i][j] - recon))
    assoc = 0.0
    for i in range(d):
        for j in range(d):
            for l in range(d):
                left = e.apply(prods[i][j] @ mats[l])
                right = e.apply(mats[i] @ prods[j][l])
                assoc = max(assoc, frobenius(left - right))
    u = e.apply(np.eye(e.dim_in))
    unit = 0.0
    for m in mats:
        unit = max(unit, frobenius(e.apply(u @ m) - m), frobenius(e.apply(m @ u) - m))
    return ChoiEffrosTable(c, assoc, unit, closure)


# ------------------------------------------------------------------------
# envelope assembly


@dataclass(frozen=True)
class EnvelopeResult:
    """Envelope of an operator space, with its certificates.

    In system mode ``idempotent`` acts on the ambient M_n and
    ``envelope_space`` is its range. In space mode the idempotent acts on
    the lifted M_{2n}, ``corner_map`` is its upper-right compression, and
    ``envelope_space`` is the corner map's range (the envelope of E itself);
    the multiplication table always lives on the idempotent's range.
    """

    space: OperatorSubspace
    mode: str
    idempotent: ChannelMap
    envelope_space: SubspaceBasis
    corner_map: ChannelMap | None
    inclusion_residual: float
    rigidity_violation: float
    certificate: str
    descent_trace: tuple[tuple[int, int, float], ...]
    choi_effros: ChoiEffrosTable
    seed: int
    tol: float

    @property
    def rank(self) -> int:
        return self.envelope_space.dim

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "rank": self.rank,
            "certificate": self.certificate,
            "rigidity_violation": float(self.rigidity_violation),
            "inclusion_residual": float(self.inclusion_residual),
            "idempotent": self.idempotent.to_json(),
            "envelope_basis": [matrix_to_json(m) for m in self.envelope_space.mats],
            "descent_trace": [[it, rk, float(res)] for it, rk, res in self.descent_trace],
            "choi_effros": self.choi_effros.to_json(),
            "seed": self.seed,
            "tol": self.tol,
        }
        if self.corner_map is not None:
            out["corner_map"] = self.corner_map.to_json()
        return out


def compute_envelope(
    space: OperatorSubspace,
    mode: str = "auto",
    seed: int = 0,
    tol: float = 1e-6,
    budget: int = 200,
    n_samples: int = 32,
    ascent_starts: int = 1,
    ascent_steps: int = 12,
) -> EnvelopeResult:
    """Injective envelope of an operator space or system.

    mode "auto" dispatches on the structure flags: unital selfadjoint spaces
    run directly ("system"), everything else goes through the corner lift
    ("space"). The returned certificate is inherited from the descent.
    """
    if mode not in ("auto", "system", "space"):
        raise ValueError(f"compute_envelope: unknown mode {mode!r}")
    if mode == "auto":
        mode = "system" if (space.unital and space.selfadjoint) else "space"
    if mode == "space":
        lifted = paulsen_lift(space)
        inner = compute_envelope(
            lifted,
            mode="system",
            seed=seed,
            tol=tol,
            budget=budget,
            n_samples=n_samples,
            ascent_starts=ascent_starts,
            ascent_steps=ascent_steps,
        )
        corner = corner_extract(inner.idempotent)
        env = corner.range_basis()
        inclusion = max(env.distance(x) for x in space.basis.mats)
        return EnvelopeResult(
            space=space,
            mode="space",
            idempotent=inner.idempotent,
            envelope_space=env,
            corner_map=corner,
            inclusion_residual=inclusion,
            rigidity_violation=inner.rigidity_violation,
            certificate=inner.certificate,
            descent_trace=inner.descent_trace,
            choi_effros=inner.choi_effros,
            seed=seed,
            tol=tol,
        )
    fset = build_system_set(space)
    e0 = seed_idempotent(sample(fset, seed), fset)
    des = descend_to_minimal(
        fset,
        e0,
        tol=tol,
        budget=budget,
        seed=seed,
        n_samples=n_samples,
        ascent_starts=ascent_starts,
        ascent_steps=ascent_steps,
    )
    e = des.idempotent
    f_basis = e.range_basis()
    inclusion = max(f_basis.distance(x) for x in space.basis.mats)
    table = choi_effros_table(e, f_basis)
    return EnvelopeResult(
        space=space,
        mode="system",
        idempotent=e,
        envelope_space=f_basis,
        corner_map=None,
        inclusion_residual=inclusion,
        rigidity_violation=des.violation,
        certificate=des.certificate,
        descent_trace=des.trace,
        choi_effros=table,
        seed=seed,
        tol=tol,
    )


def rigidity_check(
    result: EnvelopeResult,
    fset: FeasibleSet,
    seed: int = 1,
    n_samples: int = 32,
    ascent_starts: int = 1,
    ascent_steps: int = 12,
    transform=None,
) -> float:
    """Re-probe the result's idempotent over ``fset`` with fresh seeds.

    Returns the largest compression violation found; at or below tolerance
    this re-certifies both minimality and the rigidity of the inclusion
    E in F (the only probed member acting as the identity on F is the
    identity). For space-mode results pass the lifted system's set.
    """
    found = probe_minimality(
        result.idempotent,
        fset,
        n_samples=n_samples,
        seed=seed,
        ascent_starts=ascent_starts,
        ascent_steps=ascent_steps,
        transform=transform,
    )
    return found[0][0] if found else 0.0
