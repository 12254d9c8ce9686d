"""Feasible sets of Choi matrices: affine constraints intersected with the PSD cone.

A set of unital CP maps with prescribed fixed points (and optionally a
left-absorption law psi . phi = phi) is a spectrahedron in Choi coordinates.
This module represents such sets, projects onto them with two-set Dykstra
(one aggregated affine projector + the PSD cone), samples members, ascends
linear functionals, and brackets the completely bounded norm.

Hermitian matrices are handled in real coordinates throughout:
(diag, sqrt(2) Re upper, sqrt(2) Im upper), a Frobenius isometry. Complex
affine constraints on the Choi matrix become real rows in these coordinates,
so affine projections stay exactly Hermitian and hermiticity preservation of
the represented maps is structural rather than a penalty term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelMap, NonConvergenceError
from .linalg import (
    SubspaceBasis,
    as_matrix,
    frobenius,
    herm,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    orthonormalize,
    psd_project,
)

SPAN_FLAG_TOL = 1e-9


# ------------------------------------------------------------------------
# real coordinates for Hermitian matrices


def herm_to_real(j: np.ndarray) -> np.ndarray:
    d = j.shape[0]
    iu = np.triu_indices(d, 1)
    upper = j[iu]
    return np.concatenate(
        [np.real(np.diag(j)), np.sqrt(2.0) * upper.real, np.sqrt(2.0) * upper.imag]
    )


def real_to_herm(r: np.ndarray, d: int) -> np.ndarray:
    k = d * (d - 1) // 2
    j = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    j[iu] = (r[d : d + k] + 1j * r[d + k :]) / np.sqrt(2.0)
    j = j + j.conj().T
    j[np.diag_indices(d)] = r[:d]
    return j


def _rows_to_real(t: np.ndarray, rhs: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Complex rows over vec(J) -> real rows over Hermitian coordinates of J."""
    iu_r, iu_c = np.triu_indices(d, 1)
    u = t[:, iu_r * d + iu_c]  # coefficients of J[p,q], p < q
    v = t[:, iu_c * d + iu_r]  # coefficients of J[q,p]
    ac = np.concatenate(
        [
            t[:, np.arange(d) * d + np.arange(d)],
            (u + v) / np.sqrt(2.0),
            1j * (u - v) / np.sqrt(2.0),
        ],
        axis=1,
    )
    return np.vstack([ac.real, ac.imag]), np.concatenate([rhs.real, rhs.imag])


# ------------------------------------------------------------------------
# operator subspaces (the E of the feasible sets)


@dataclass(frozen=True)
class OperatorSubspace:
    """A subspace of M_n given by an orthonormal matrix basis, with structure flags.

    Flags are verified on construction: ``unital`` means I is in the span,
    ``selfadjoint`` means the span is closed under the adjoint.
    """

    ambient: int
    basis: SubspaceBasis
    unital: bool
    selfadjoint: bool

    def __post_init__(self):
        n = self.ambient
        if self.basis.n != n:
            raise ValueError(f"OperatorSubspace: basis is {self.basis.n}x{self.basis.n}, ambient {n}")
        eye_dist = self.basis.distance(np.eye(n))
        if self.unital != bool(eye_dist <= SPAN_FLAG_TOL * np.sqrt(n)):
            raise ValueError(f"OperatorSubspace: unital flag contradicts basis (distance {eye_dist:.3e})")
        adj_dist = max(self.basis.distance(m.conj().T) for m in self.basis.mats)
        if self.selfadjoint != bool(adj_dist <= SPAN_FLAG_TOL):
            raise ValueError(f"OperatorSubspace: selfadjoint flag contradicts basis (distance {adj_dist:.3e})")

    @classmethod
    def from_matrices(cls, mats) -> "OperatorSubspace":
        stack = np.stack([np.asarray(m, dtype=complex) for m in mats])
        basis = orthonormalize(stack)
        n = basis.n
        unital = basis.distance(np.eye(n)) <= SPAN_FLAG_TOL * np.sqrt(n)
        selfadjoint = max(basis.distance(m.conj().T) for m in basis.mats) <= SPAN_FLAG_TOL
        return cls(n, basis, bool(unital), bool(selfadjoint))

    @property
    def dim(self) -> int:
        return self.basis.dim

    def to_json(self, mode: str = "system") -> dict:
        return {
            "ambient": self.ambient,
            "basis": [matrix_to_json(m) for m in self.basis.mats],
            "mode": mode,
        }

    @classmethod
    def from_json(cls, obj: dict) -> tuple["OperatorSubspace", str]:
        try:
            n = int(obj["ambient"])
            mats = [matrix_from_json(m) for m in obj["basis"]]
            mode = obj.get("mode", "system")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"operator space json: missing field ({exc})") from exc
        if mode not in ("system", "space"):
            raise ValueError(f"operator space json: unknown mode {mode!r}")
        space = cls.from_matrices(mats)
        if space.ambient != n:
            raise ValueError(f"operator space json: basis is {space.ambient}x{space.ambient}, ambient says {n}")
        return space, mode


# ------------------------------------------------------------------------
# constraint rows (complex, over vec of the Choi matrix)


def _unital_rows(n: int) -> tuple[np.ndarray, np.ndarray]:
    """phi(I) = I: for each (a,b), sum_i J[(i,a),(i,b)] = delta_ab."""
    d = n * n
    t = np.zeros((n * n, d * d), dtype=complex)
    rhs = np.zeros(n * n, dtype=complex)
    for a in range(n):
        for b in range(n):
            row = a * n + b
            for i in range(n):
                t[row, (i * n + a) * d + (i * n + b)] += 1.0
            rhs[row] = 1.0 if a == b else 0.0
    return t, rhs


def _fix_rows(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """phi(x) = x: for each (a,b), sum_ij x[i,j] J[(i,a),(j,b)] = x[a,b]."""
    d = n * n
    t = np.zeros((n * n, d * d), dtype=complex)
    rhs = np.zeros(n * n, dtype=complex)
    for a in range(n):
        for b in range(n):
            row = a * n + b
            for i in range(n):
                for j in range(n):
                    t[row, (i * n + a) * d + (j * n + b)] += x[i, j]
            rhs[row] = x[a, b]
    return t, rhs


def _absorb_rows(s_psi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """psi . phi = phi, i.e. (S_psi - I) S_phi = 0, written over Choi entries."""
    d = n * n
    m = s_psi - np.eye(d)
    t = np.zeros((d * d, d * d), dtype=complex)
    row_grid = np.arange(d)[:, None] * d + np.arange(d)[None, :]  # (CD, IJ)
    for a in range(n):
        for b in range(n):
            cols = ((np.arange(n) * n + a)[:, None] * d + (np.arange(n) * n + b)[None, :]).ravel()
            t[row_grid, cols[None, :]] += m[:, a * n + b][:, None]
    return t, np.zeros(d * d, dtype=complex)


@dataclass(frozen=True)
class MembershipReport:
    residuals: dict[str, float]
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    @property
    def worst(self) -> float:
        return max(self.residuals.values())


def _find_exposing_vector(
    a: np.ndarray, b: np.ndarray, d: int, pocs_iter: int = 600, tol: float = 1e-10
) -> np.ndarray | None:
    """A PSD matrix W != 0 with <W, J> = 0 for every J in the affine set, if any.

    Such a W certifies that the whole feasible set lies in the face
    {J PSD : W J = 0} of the cone. Candidates live in the span of the
    constraint normals A^T y restricted to y . b = 0, normalized to trace 1;
    alternating projections between that affine slice and the PSD cone either
    find one or stall, in which case None is returned (no reduction claimed).
    """
    u, s, _ = np.linalg.svd(a.T @ _b_orth_complement(a, b), full_matrices=False)
    q = u[:, s > 1e-10 * max(1.0, s[0] if s.size else 1.0)]
    if q.shape[1] == 0:
        return None
    tr_vec = np.zeros(d * d)
    tr_vec[:d] = 1.0  # trace functional in real Hermitian coordinates
    c = q.T @ tr_vec
    if np.linalg.norm(c) < 1e-12:
        return None

    def onto_slice(w: np.ndarray) -> np.ndarray:
        z = q.T @ w
        z = z + c * (1.0 - c @ z) / (c @ c)
        return q @ z

    for start in range(3):
        rng = np.random.default_rng(start)
        w = rng.standard_normal(d * d) if start else tr_vec / d
        for _ in range(pocs_iter):
            w = onto_slice(w)
            w = herm_to_real(psd_project(real_to_herm(w, d)))
        wm = real_to_herm(onto_slice(w), d)
        gap = max(0.0, -float(hermitian_eig(herm(wm)).values[0]))
        if gap <= tol and abs(np.trace(wm).real - 1.0) <= 1e-8:
            return herm(wm)
    return None


def _b_orth_complement(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of {y : y . b = 0} as columns (identity if b = 0)."""
    rows = a.shape[0]
    nb = np.linalg.norm(b)
    if nb < 1e-14:
        return np.eye(rows)
    u = b / nb
    q, r = np.linalg.qr(np.eye(rows) - np.outer(u, u))
    return q[:, np.abs(np.diag(r)) > 1e-10]


def _compress_rows(t: np.ndarray, d: int, v: np.ndarray) -> np.ndarray:
    """Rewrite complex rows over vec(J) as rows over vec(Y) where J = V Y V^*."""
    r = v.shape[1]
    out = np.empty((t.shape[0], r * r), dtype=complex)
    for i in range(t.shape[0]):
        out[i] = (v.T @ t[i].reshape(d, d) @ v.conj()).reshape(-1)
    return out


@dataclass(frozen=True)
class FeasibleSet:
    """{Choi J : J PSD, affine constraint groups hold}, facially reduced.

    Membership is always reported against the full-coordinate constraint
    groups. Projection works in compressed coordinates J = V Y V^*, where V
    spans the smallest cone face found to contain the set: feasible sets of
    interest often consist entirely of rank-deficient Choi matrices (zero
    Slater margin), where alternating projections are only sublinear; after
    reduction the compressed set has relative interior and two-set Dykstra
    (one aggregated affine projector + the PSD cone) converges linearly.
    The nearest point in Y coordinates is the nearest point in J coordinates,
    because the set lies inside the span of {V Y V^*}.
    """

    n: int
    groups: tuple[tuple[str, np.ndarray, np.ndarray], ...]
    face: np.ndarray = field(repr=False, compare=False)  # (d, r) isometry
    a_c: np.ndarray = field(repr=False, compare=False)
    b_c: np.ndarray = field(repr=False, compare=False)
    a_c_pinv: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_complex_groups(cls, n: int, cgroups, reduce_face: bool = True) -> "FeasibleSet":
        d = n * n
        real_groups = tuple(
            (name, *_rows_to_real(t, rhs, d)) for name, t, rhs in cgroups
        )
        v = np.eye(d, dtype=complex)
        for _ in range(d):  # singularity degree is at most the dimension
            r = v.shape[1]
            a, b = _stack_compressed(cgroups, d, v)
            if not reduce_face or r == 1:
                break
            w = _find_exposing_vector(a, b, r)
            if w is None:
                break
            eig = hermitian_eig(herm(w))
            keep = eig.values <= 1e-7 * max(1.0, float(eig.values[-1]))
            if not keep.any() or keep.all():
                break
            v = v @ eig.vectors[:, keep]
            q, _ = np.linalg.qr(v)
            v = q
        a, b = _stack_compressed(cgroups, d, v)
        return cls(n, real_groups, v, a, b, np.linalg.pinv(a, rcond=1e-12))

    @property
    def choi_dim(self) -> int:
        return self.n * self.n

    @property
    def face_dim(self) -> int:
        return self.face.shape[1]

    def compress(self, j: np.ndarray) -> np.ndarray:
        return self.face.conj().T @ j @ self.face

    def expand(self, y: np.ndarray) -> np.ndarray:
        return self.face @ y @ self.face.conj().T

    def project_affine_compressed(self, y: np.ndarray) -> np.ndarray:
        r = herm_to_real(herm(y))
        r = r - self.a_c_pinv @ (self.a_c @ r - self.b_c)
        return real_to_herm(r, self.face_dim)

    def membership(self, j, tol: float = 1e-8) -> MembershipReport:
        j = j.choi if isinstance(j, ChannelMap) else as_matrix(j, self.choi_dim, self.choi_dim)
        res: dict[str, float] = {"hermitian": frobenius(j - j.conj().T)}
        r = herm_to_real(herm(j))
        for name, a, b in self.groups:
            res[name] = float(np.linalg.norm(a @ r - b))
        wmin = float(hermitian_eig(herm(j)).values[0])
        res["psd"] = max(0.0, -wmin)
        return MembershipReport(res, tol)


def _stack_compressed(cgroups, d: int, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    rhss = []
    for _, t, rhs in cgroups:
        a, b = _rows_to_real(_compress_rows(t, d, v), rhs, v.shape[1])
        rows.append(a)
        rhss.append(b)
    return np.vstack(rows), np.concatenate(rhss)


def build_system_set(
    space: OperatorSubspace, absorb: ChannelMap | None = None
) -> FeasibleSet:
    """UCP maps fixing ``space`` pointwise; optionally also absorbed by ``absorb``.

    With ``absorb`` = psi, adds the affine law psi . phi = phi (the feasible
    set used for noncommutative Poisson boundaries). Nonemptiness of the plain
    system set is certified by checking the identity channel's membership.
    """
    if not (space.unital and space.selfadjoint):
        raise ValueError(
            "build_system_set: need a unital selfadjoint subspace (operator system); "
            "plain operator spaces go through the two-by-two corner lift first"
        )
    n = space.ambient
    cgroups = [("unital", *_unital_rows(n))]
    for k, x in enumerate(space.basis.mats):
        cgroups.append((f"fix:{k}", *_fix_rows(x, n)))
    if absorb is not None:
        if absorb.dim_in != n or absorb.dim_out != n:
            raise ValueError("build_system_set: absorbing channel must act on the same ambient M_n")
        cgroups.append(("absorb", *_absorb_rows(absorb.superop, n)))
    fset = FeasibleSet.from_complex_groups(n, cgroups)
    if absorb is None:
        rep = fset.membership(ChannelMap.identity(n), tol=1e-8)
        if not rep.ok:
            raise RuntimeError(f"build_system_set: identity fails membership ({rep.residuals})")
    return fset


# ------------------------------------------------------------------------
# projection, sampling, linear ascent


def _face_polish(y: np.ndarray, fset: FeasibleSet, tol: float) -> np.ndarray | None:
    """Try to finish a stalled projection by pinning the active sub-face.

    Once the compressed iterate is close to the solution, its small
    eigenvalues reveal any residual rank deficiency: adding the affine rows
    Y w = 0 for the near-null vectors w and re-projecting yields an exact
    solution when the guess is right. Returns the polished full-size Choi
    matrix on certified membership, else None.
    """
    r = fset.face_dim
    eig = hermitian_eig(herm(y))
    scale = max(float(eig.values[-1]), 1.0)
    rv = herm_to_real(herm(y))
    for cut in (1e-6, 1e-9):
        k = int(np.sum(eig.values < cut * scale))
        if k == 0:
            continue
        w = eig.vectors[:, :k]
        t = np.zeros((k * r, r * r), dtype=complex)
        for widx in range(k):
            for p_row in range(r):
                t[widx * r + p_row, p_row * r : (p_row + 1) * r] = w[:, widx]
        a_face, b_face = _rows_to_real(t, np.zeros(k * r, dtype=complex), r)
        a_aug = np.vstack([fset.a_c, a_face])
        b_aug = np.concatenate([fset.b_c, b_face])
        delta, *_ = np.linalg.lstsq(a_aug, a_aug @ rv - b_aug, rcond=None)
        cand = fset.expand(real_to_herm(rv - delta, r))
        if fset.membership(cand, tol).ok:
            return cand
    return None


def dykstra_project(
    j0: np.ndarray,
    fset: FeasibleSet,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    polish_every: int = 100,
) -> ChannelMap:
    """Frobenius-nearest member of the set, by two-set Dykstra.

    Runs in the facially reduced coordinates, alternating the PSD cone and
    the aggregated affine projector with the standard correction vectors.
    The affine iterate is expanded and returned, so affine residuals are at
    working precision and the PSD defect is what ``tol`` controls. Every
    ``polish_every`` iterations an active-face refinement is attempted, which
    turns near-converged iterates into exact solutions.
    """
    d = fset.choi_dim
    x = fset.compress(herm(as_matrix(j0, d, d)))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    history: list[tuple[int, float]] = []
    for it in range(1, max_iter + 1):
        x_prev = x
        y = psd_project(x + p)
        p = x + p - y
        t = y + q
        x = fset.project_affine_compressed(t)
        q = t - x
        scale = max(1.0, frobenius(x))
        gap = frobenius(x - y)
        step = frobenius(x - x_prev)
        # feasibility of the iterate is necessary but not sufficient: Dykstra
        # passes through the set well before reaching the projection, so wait
        # for the two projected iterates to coalesce.
        converged = gap <= tol * scale and step <= tol * scale
        full = fset.expand(x)
        rep = fset.membership(full, tol)
        history.append((it, max(rep.worst, gap)))
        if converged and rep.ok:
            return ChannelMap(fset.n, fset.n, herm(full))
        if it % polish_every == 0 and gap <= 1e-4 * scale:
            z = _face_polish(x, fset, tol)
            if z is not None:
                return ChannelMap(fset.n, fset.n, herm(z))
    raise NonConvergenceError(
        f"dykstra_project: residual {history[-1][1]:.3e} > {tol:.1e} after {max_iter} iterations",
        history,
    )


def sample(
    fset: FeasibleSet,
    seed: int,
    scale: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> ChannelMap:
    """Random member: project a Gaussian Hermitian perturbation of Choi(id)."""
    rng = np.random.default_rng(seed)
    d = fset.choi_dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    j0 = ChannelMap.identity(fset.n).choi + scale * herm(g)
    return dykstra_project(j0, fset, tol, max_iter)


def maximize_linear(
    fset: FeasibleSet,
    objective: np.ndarray,
    n_starts: int = 8,
    seed: int = 0,
    tol: float = 1e-8,
    ascent_steps: int = 60,
    max_iter: int = 100_000,
) -> tuple[ChannelMap, float]:
    """Best-effort maximizer of Re<objective, J> over the set.

    Projected gradient ascent with backtracking from ``n_starts`` random
    members. Convex maximization peaks at extreme points and this is a
    heuristic lower bound on the true maximum, not a certificate.
    """
    d = fset.choi_dim
    c = herm(as_matrix(objective, d, d))

    def value(j: np.ndarray) -> float:
        return float(np.real(np.trace(c.conj().T @ j)))

    best_j, best_v = None, -np.inf
    for k in range(n_starts):
        j = sample(fset, seed + k, tol=tol, max_iter=max_iter).choi
        v = value(j)
        step = 1.0
        for _ in range(ascent_steps):
            cand = dykstra_project(j + step * c, fset, tol, max_iter).choi
            cv = value(cand)
            if cv > v + 1e-12:
                j, v = cand, cv
                step *= 1.5
            else:
                step *= 0.5
                if step < 1e-8:
                    break
        if v > best_v:
            best_j, best_v = j, v
    return ChannelMap(fset.n, fset.n, best_j), best_v


# ------------------------------------------------------------------------
# completely bounded norm


def _apply_extended(phi: ChannelMap, x: np.ndarray) -> np.ndarray:
    """(phi (x) id_n)(x) for x in M_n (x) M_n, blocks indexed (i,a),(j,b)."""
    n, m = phi.dim_in, phi.dim_out
    s4 = phi.superop.reshape(m, m, n, n)
    x4 = x.reshape(n, n, n, n)
    return np.einsum("cdij,iajb->cadb", s4, x4).reshape(m * n, m * n)


def _swap_matrix(n: int) -> np.ndarray:
    x = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for a in range(n):
            x[i * n + a, a * n + i] = 1.0
    return x


def witness_lower_bound(
    phi: ChannelMap, n_starts: int = 3, seed: int = 0, iters: int = 60
) -> tuple[float, np.ndarray]:
    """Certified lower bound on ||phi||_cb by ascent over norm-1 witnesses.

    Alternates (a) the top singular pair of (phi (x) id)(X) and (b) the
    norm-ball maximizer X = U V^* of the linearized objective. Every iterate
    is feasible, so the best value found is always a valid lower bound.
    Starts: the swap witness, the maximally entangled witness, random unitaries.
    """
    n = phi.dim_in
    rng = np.random.default_rng(seed)
    vec_eye = np.eye(n, dtype=complex).reshape(-1) / np.sqrt(n)
    starts = [_swap_matrix(n), np.outer(vec_eye, vec_eye.conj())]
    for _ in range(n_starts):
        g = rng.standard_normal((n * n, n * n)) + 1j * rng.standard_normal((n * n, n * n))
        q, r = np.linalg.qr(g)
        starts.append(q * (np.diag(r) / np.abs(np.diag(r))))
    s4 = phi.superop.reshape(phi.dim_out, phi.dim_out, n, n)
    best_v, best_x = -np.inf, starts[0]
    for x in starts:
        val = _spectral_top(_apply_extended(phi, x))[0]
        for _ in range(iters):
            sigma, eta, xi = _spectral_top(_apply_extended(phi, x))
            g = np.einsum(
                "ca,cdij,db->iajb",
                eta.reshape(phi.dim_out, n),
                s4.conj(),
                xi.conj().reshape(phi.dim_out, n),
            ).reshape(n * n, n * n)
            u, sv, vh = np.linalg.svd(g)
            x_new = u @ vh
            new_val = _spectral_top(_apply_extended(phi, x_new))[0]
            if new_val <= val + 1e-12:
                break
            x, val = x_new, new_val
        if val > best_v:
            best_v, best_x = val, x
    return float(best_v), best_x


def _spectral_top(y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(y)
    return float(s[0]), u[:, 0], vh[0].conj()


def _partial_trace_in(y: np.ndarray, n: int, m: int) -> np.ndarray:
    return np.einsum("iaib->ab", y.reshape(n, m, n, m))


def polar_dual_upper_bound(phi: ChannelMap) -> float:
    """Upper bound on ||phi||_cb from the polar-decomposition block completion.

    [[ (JJ*)^1/2, J ], [ J*, (J*J)^1/2 ]] is PSD for any J, and rescaling the
    two blocks by s^2 and 1/s^2 balances the partial-trace norms, so the
    geometric mean of ||Tr_in (JJ*)^1/2|| and ||Tr_in (J*J)^1/2|| bounds the
    cb norm. Exact for CP maps and for the transpose.
    """
    n, m = phi.dim_in, phi.dim_out
    u, s, vh = np.linalg.svd(phi.choi)
    y0 = (u * s) @ u.conj().T  # (J J*)^1/2
    y1 = (vh.conj().T * s) @ vh  # (J* J)^1/2
    a = _spectral_norm_h(_partial_trace_in(y0, n, m))
    b = _spectral_norm_h(_partial_trace_in(y1, n, m))
    return float(np.sqrt(a * b))


def _spectral_norm_h(a: np.ndarray) -> float:
    return float(np.abs(hermitian_eig(herm(a)).values).max())


def _clip_above(y: np.ndarray, t: float) -> np.ndarray:
    eig = hermitian_eig(herm(y))
    return (eig.vectors * np.minimum(eig.values, t)) @ eig.vectors.conj().T


def _block_completion_feasible(
    phi: ChannelMap, t: float, max_iter: int = 3000, feas_tol: float = 1e-9
) -> bool:
    """Alternating projections for: exists PSD [[Y0, J],[J*, Y1]] with
    Tr_in Y_i <= t I. Returns True only when a completion is found to
    tolerance; False means the budget ran out (not an infeasibility proof)."""
    n, m = phi.dim_in, phi.dim_out
    d = n * m
    j = phi.choi
    z = np.zeros((2 * d, 2 * d), dtype=complex)
    z[:d, d:] = j
    z[d:, :d] = j.conj().T
    z[:d, :d] = np.eye(d) * t / m
    z[d:, d:] = np.eye(d) * t / m
    for _ in range(max_iter):
        # pin the corners
        z[:d, d:] = j
        z[d:, :d] = j.conj().T
        # clip both partial traces from above at t (exact Frobenius projection
        # onto the preimage, since Tr_in Tr_in^* = n I)
        for blk in (slice(0, d), slice(d, 2 * d)):
            y = z[blk, blk]
            tr = _partial_trace_in(y, n, m)
            delta = _clip_above(tr, t) - tr
            z[blk, blk] = y + np.kron(np.eye(n), delta) / n
        z = psd_project(z)
        corner = frobenius(z[:d, d:] - j)
        excess = 0.0
        for blk in (slice(0, d), slice(d, 2 * d)):
            w = hermitian_eig(herm(_partial_trace_in(z[blk, blk], n, m))).values
            excess = max(excess, max(0.0, float(w[-1]) - t))
        if corner <= feas_tol and excess <= feas_tol:
            return True
    return False


@dataclass(frozen=True)
class CbNormBracket:
    lower: float
    upper: float
    tol: float
    bisections: int

    @property
    def converged(self) -> bool:
        return self.upper - self.lower <= self.tol


def cb_norm_bracket(
    phi: ChannelMap, tol: float = 1e-3, seed: int = 0, ap_budget: int = 3000
) -> CbNormBracket:
    """Two-sided bracket on ||phi||_cb.

    Lower: witness ascent (always valid). Upper: polar-dual completion,
    refined by bisection whenever an alternating-projection run certifies a
    completion at a smaller scale. The bracket collapses immediately for CP
    maps, for the transpose, and for their scalar multiples.
    """
    lo, _ = witness_lower_bound(phi, seed=seed)
    hi = polar_dual_upper_bound(phi)
    if hi < lo:  # both are valid bounds; order can flip only by roundoff
        lo, hi = min(lo, hi), max(lo, hi)
    rounds = 0
    search_lo = lo
    while hi - lo > tol and rounds < 40 and hi - search_lo > 0.25 * tol:
        mid = 0.5 * (search_lo + hi)
        if _block_completion_feasible(phi, mid, max_iter=ap_budget):
            hi = mid
        else:
            search_lo = mid
        rounds += 1
    return CbNormBracket(lo, hi, tol, rounds)


def cb_norm(phi: ChannelMap, tol: float = 1e-3, seed: int = 0) -> float:
    """Upper estimate of the completely bounded norm.

    CP maps use ||phi(I)|| (exact). Otherwise returns the upper end of
    ``cb_norm_bracket``, which is a certified upper bound up to the stated
    alternating-projection tolerance.
    """
    choi = phi.choi
    is_h = frobenius(choi - choi.conj().T) <= 1e-9 * max(1.0, frobenius(choi))
    if is_h:
        wmin = float(hermitian_eig(herm(choi)).values[0])
        if phi.cp_hint or wmin >= -1e-9 * max(1.0, frobenius(choi)):
            return _spectral_norm_h(phi.apply(np.eye(phi.dim_in)))
    return cb_norm_bracket(phi, tol=tol, seed=seed).upper
