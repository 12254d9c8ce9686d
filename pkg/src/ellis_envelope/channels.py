"""Linear maps on matrix algebras: Choi matrices, superoperators, ergodic averages.

Conventions, frozen across the package:

- ``vec`` is row-major (numpy reshape order).
- The Choi matrix of phi: M_n -> M_m is ``choi = sum_ij E_ij (x) phi(E_ij)``
  with the matrix units E_ij enumerated row-major; it is (n*m) x (n*m) and
  phi is completely positive iff choi is PSD.
- The superoperator S is m^2 x n^2 with ``vec(phi(x)) = S @ vec(x)``.
- The two representations are entrywise reshuffles of each other:
  ``S[(a,b),(i,j)] = choi[(i,a),(j,b)]``.

Compositions multiply superoperators; the Hilbert-Schmidt adjoint is the
conjugate transpose of the superoperator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .linalg import (
    ATOL_ITERATIVE,
    SubspaceBasis,
    as_matrix,
    frobenius,
    herm,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    unvec,
    vec,
)

# Singular values above this count toward the rank of an idempotent's superoperator.
RANK_SV_CUTOFF = 1e-7

# Iterative Cesaro averaging: stopping tolerance and doubling cap.
CESARO_ITER_TOL = 1e-10
CESARO_MAX_N = 2**20


class NonConvergenceError(RuntimeError):
    """An iterative scheme exhausted its budget; carries (step, residual) history."""

    def __init__(self, message: str, history: list[tuple[int, float]]):
        super().__init__(message)
        self.history = history


def choi_to_superop(choi: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    c4 = choi.reshape(dim_in, dim_out, dim_in, dim_out)
    return c4.transpose(1, 3, 0, 2).reshape(dim_out * dim_out, dim_in * dim_in)


def superop_to_choi(s: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    s4 = s.reshape(dim_out, dim_out, dim_in, dim_in)
    return s4.transpose(2, 0, 3, 1).reshape(dim_in * dim_out, dim_in * dim_out)


@dataclass(frozen=True)
class ChannelMap:
    """A linear map M_{dim_in} -> M_{dim_out} stored by its Choi matrix.

    ``cp_hint`` records complete positivity known by construction (Kraus form,
    composition of CP maps); ``check_structure`` computes it spectrally.
    """

    dim_in: int
    dim_out: int
    choi: np.ndarray
    cp_hint: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        d = self.dim_in * self.dim_out
        object.__setattr__(self, "choi", as_matrix(self.choi, d, d))

    @cached_property
    def superop(self) -> np.ndarray:
        return choi_to_superop(self.choi, self.dim_in, self.dim_out)

    @classmethod
    def from_superop(cls, s: np.ndarray, dim_in: int, dim_out: int, cp_hint=None) -> "ChannelMap":
        s = as_matrix(s, dim_out * dim_out, dim_in * dim_in)
        return cls(dim_in, dim_out, superop_to_choi(s, dim_in, dim_out), cp_hint)

    @classmethod
    def from_kraus(cls, kraus, dim_in: int | None = None, dim_out: int | None = None) -> "ChannelMap":
        """Build phi(x) = sum_k K_k x K_k^*; CP by construction."""
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        if not ops:
            raise ValueError("from_kraus: need at least one Kraus operator")
        m, n = ops[0].shape
        dim_in = n if dim_in is None else dim_in
        dim_out = m if dim_out is None else dim_out
        d = dim_in * dim_out
        choi = np.zeros((d, d), dtype=complex)
        for k in ops:
            if k.shape != (dim_out, dim_in):
                raise ValueError(f"from_kraus: operator shape {k.shape} != {(dim_out, dim_in)}")
            w = vec(k.T)  # w[(i,a)] = K[a,i]
            choi += np.outer(w, w.conj())
        return cls(dim_in, dim_out, choi, cp_hint=True)

    @classmethod
    def identity(cls, n: int) -> "ChannelMap":
        return cls.from_kraus([np.eye(n, dtype=complex)])

    @classmethod
    def conjugation(cls, u: np.ndarray) -> "ChannelMap":
        """x -> u x u^*."""
        return cls.from_kraus([as_matrix(u)])

    @classmethod
    def pinching(cls, n: int) -> "ChannelMap":
        """Projection onto the diagonal: x -> sum_i E_ii x E_ii."""
        eye = np.eye(n, dtype=complex)
        return cls.from_kraus([np.outer(eye[i], eye[i]) for i in range(n)])

    @classmethod
    def schur(cls, m: np.ndarray) -> "ChannelMap":
        """Entrywise multiplier x -> m .* x (CP iff m is PSD)."""
        m = as_matrix(m)
        n = m.shape[0]
        d = n * n
        choi = np.zeros((d, d), dtype=complex)
        for i in range(n):
            for j in range(n):
                choi[i * n + i, j * n + j] = m[i, j]
        return cls(n, n, choi)

    @classmethod
    def transpose_map(cls, n: int) -> "ChannelMap":
        """x -> x^T; the canonical positive, not completely positive map."""
        choi = np.zeros((n * n, n * n), dtype=complex)
        for i in range(n):
            for j in range(n):
                choi[i * n + j, j * n + i] = 1.0  # E_ij (x) E_ji summed = swap
        return cls(n, n, choi)

    @classmethod
    def trace_state(cls, n: int) -> "ChannelMap":
        """x -> (tr x / n) I, the maximally depolarizing unital channel."""
        eye = np.eye(n, dtype=complex)
        return cls.from_kraus([np.outer(eye[i], eye[j]) / np.sqrt(n) for i in range(n) for j in range(n)])

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = as_matrix(x, self.dim_in, self.dim_in)
        return unvec(self.superop @ vec(x), self.dim_out, self.dim_out)

    def apply_via_choi(self, x: np.ndarray) -> np.ndarray:
        """Same map evaluated from the Choi tensor; used to cross-check the reshuffle."""
        x = as_matrix(x, self.dim_in, self.dim_in)
        c4 = self.choi.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)
        return np.einsum("iajb,ij->ab", c4, x)

    def adjoint(self) -> "ChannelMap":
        """Hilbert-Schmidt adjoint: <phi*(y), x> = <y, phi(x)>."""
        return ChannelMap.from_superop(self.superop.conj().T, self.dim_out, self.dim_in, self.cp_hint)

    def rank(self, sv_cutoff: float = RANK_SV_CUTOFF) -> int:
        """Number of superoperator singular values above the cutoff."""
        return int(np.sum(np.linalg.svd(self.superop, compute_uv=False) > sv_cutoff))

    def range_basis(self, sv_cutoff: float = RANK_SV_CUTOFF) -> SubspaceBasis:
        """Orthonormal basis (as matrices) of the range of the map."""
        u, s, _ = np.linalg.svd(self.superop)
        r = int(np.sum(s > sv_cutoff))
        mats = [unvec(u[:, k], self.dim_out, self.dim_out) for k in range(r)]
        return SubspaceBasis(np.stack(mats))

    def to_json(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "repr": "choi",
            "choi": matrix_to_json(self.choi),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelMap":
        try:
            n, m, rep = int(obj["dim_in"]), int(obj["dim_out"]), obj["repr"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"channel json: missing field ({exc})") from exc
        if rep == "choi":
            choi = matrix_from_json(obj["choi"])
            return cls(n, m, choi)
        if rep == "kraus":
            ops = [matrix_from_json(k) for k in obj["kraus"]]
            return cls.from_kraus(ops, n, m)
        raise ValueError(f"channel json: unknown repr {rep!r}")


def compose(f: ChannelMap, g: ChannelMap) -> ChannelMap:
    """The composition f . g (apply g first)."""
    if g.dim_out != f.dim_in:
        raise ValueError(f"compose: dimension mismatch ({f.dim_in} vs {g.dim_out})")
    hint = True if (f.cp_hint and g.cp_hint) else None
    return ChannelMap.from_superop(f.superop @ g.superop, g.dim_in, f.dim_out, cp_hint=hint)


def _spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False)[0])


@dataclass(frozen=True)
class StructureReport:
    cp: bool
    unital: bool
    trace_preserving: bool
    idempotent: bool | None
    cb_contraction: bool
    choi_min_eig: float
    unital_residual: float
    trace_residual: float
    idempotent_residual: float | None
    cb_bound: float


def check_structure(phi: ChannelMap, tol: float = 1e-9, compute_cb: bool = True) -> StructureReport:
    """Structural flags with their residuals; never raises on a 'bad' map."""
    n, m = phi.dim_in, phi.dim_out
    choi_min = float(hermitian_eig(herm(phi.choi)).values[0])
    cp = _is_hermitian(phi.choi, tol) and choi_min >= -1e-9 * max(1.0, frobenius(phi.choi))
    unital_res = frobenius(phi.apply(np.eye(n)) - np.eye(m))
    c4 = phi.choi.reshape(n, m, n, m)
    trace_res = frobenius(np.einsum("iaja->ij", c4) - np.eye(n))
    idem_res = None
    if n == m:
        idem_res = frobenius(phi.superop @ phi.superop - phi.superop)
    if cp:
        cb = _spectral_norm(phi.apply(np.eye(n)))
    elif compute_cb:
        from .spectrahedron import cb_norm

        cb = cb_norm(phi)
    else:
        cb = float("inf")
    return StructureReport(
        cp=bool(cp),
        unital=bool(unital_res <= tol * max(1.0, np.sqrt(m))),
        trace_preserving=bool(trace_res <= tol * max(1.0, np.sqrt(n))),
        idempotent=None if idem_res is None else bool(idem_res <= ATOL_ITERATIVE),
        cb_contraction=bool(cb <= 1.0 + 1e-6),
        choi_min_eig=choi_min,
        unital_residual=unital_res,
        trace_residual=trace_res,
        idempotent_residual=idem_res,
        cb_bound=cb,
    )


def _is_hermitian(a: np.ndarray, tol: float = 1e-9) -> bool:
    return frobenius(a - a.conj().T) <= tol * max(1.0, frobenius(a))


def _require_unital_cp(phi: ChannelMap, who: str, tol: float = 1e-7) -> None:
    if phi.dim_in != phi.dim_out:
        raise ValueError(f"{who}: map must be square (got {phi.dim_in} -> {phi.dim_out})")
    n = phi.dim_in
    unital_res = frobenius(phi.apply(np.eye(n)) - np.eye(n))
    if unital_res > tol:
        raise ValueError(f"{who}: map is not unital (residual {unital_res:.3e})")
    if not _is_hermitian(phi.choi, 1e-8):
        raise ValueError(f"{who}: Choi matrix is not Hermitian")
    wmin = float(hermitian_eig(herm(phi.choi)).values[0])
    if wmin < -1e-7 * max(1.0, frobenius(phi.choi)):
        raise ValueError(f"{who}: map is not CP (min Choi eigenvalue {wmin:.3e})")


def fixed_space(phi: ChannelMap, sv_rtol: float = 1e-9) -> SubspaceBasis:
    """Orthonormal basis of F_phi = {x : phi(x) = x} for a unital CP map.

    Computed as the null space of (superop - I); singular values below
    ``sv_rtol * max(1, ||superop||)`` are treated as zero.
    """
    _require_unital_cp(phi, "fixed_space")
    s = phi.superop
    a = s - np.eye(s.shape[0])
    _, sv, vh = np.linalg.svd(a)
    thresh = sv_rtol * max(1.0, _spectral_norm(s))
    r = int(np.sum(sv < thresh))
    if r == 0:
        raise ValueError("fixed_space: no fixed points found; map is not unital to tolerance")
    n = phi.dim_in
    mats = [unvec(vh[-(k + 1)].conj(), n, n) for k in range(r)]
    return SubspaceBasis(np.stack(mats[::-1]))


@dataclass(frozen=True)
class ErgodicResult:
    """Ergodic projection of a unital CP map.

    ``idempotent`` is the limit of the Cesaro averages (1/N) sum_{k=1..N} phi^k,
    i.e. the projection onto the fixed space along the range of (id - phi).
    """

    idempotent: ChannelMap
    fixed_space: SubspaceBasis
    method: str
    residuals: dict[str, float]
    agreement: float | None = None


def _spectral_ergodic_projection(s: np.ndarray, sv_rtol: float = 1e-9) -> np.ndarray:
    """Projection onto ker(I - s) along ran(I - s), from the SVD of (I - s)."""
    d = s.shape[0]
    a = np.eye(d) - s
    u, sv, vh = np.linalg.svd(a)
    thresh = sv_rtol * max(1.0, _spectral_norm(s))
    r = int(np.sum(sv < thresh))
    if r == 0:
        raise ValueError("cesaro_idempotent: eigenvalue 1 not found in the spectrum")
    k = vh[d - r :].conj().T  # ker(a)
    l = u[:, d - r :]  # ker(a^*) = ran(a)^perp
    return k @ np.linalg.solve(l.conj().T @ k, l.conj().T)


def _iterative_ergodic_projection(s: np.ndarray) -> tuple[np.ndarray, list[tuple[int, float]]]:
    """Cesaro average, then repeated squaring.

    The plain average tau_N converges only at rate O(1/N) when s has
    peripheral spectrum besides 1. But every eigenvalue of tau_N other than 1
    lies strictly inside the unit disk (|sum_{k<N} lambda^k| < N for lambda != 1
    on the closed disk), and tau_N commutes with the ergodic projection with
    zero cross terms, so squaring tau_N squares the error. The loop computes a
    cluster point of products of Cesaro means; it converges doubly
    geometrically, uniformly over unital CP inputs.
    """
    d = s.shape[0]
    ssum = np.eye(d)  # sum_{k=0..N-1} s^k, N = 1
    spow = s.copy()  # s^N
    n = 1
    while n < 64:
        ssum = ssum + spow @ ssum
        spow = spow @ spow
        n *= 2
    b = ssum / n
    history: list[tuple[int, float]] = []
    total = n  # highest power of s folded in so far
    while total < CESARO_MAX_N:
        b2 = b @ b
        res = frobenius(b2 - b)
        history.append((total, res))
        if res <= CESARO_ITER_TOL:
            return b2, history
        b = b2
        total *= 2
    raise NonConvergenceError(
        f"cesaro_idempotent: no convergence to {CESARO_ITER_TOL:.1e} within a power budget of {CESARO_MAX_N}",
        history,
    )


def cesaro_idempotent(
    phi: ChannelMap, mode: str = "spectral", sv_rtol: float = 1e-9
) -> ErgodicResult:
    """Ergodic (Cesaro) idempotent of a unital CP map.

    mode: "spectral" (exact up to linear algebra, default), "iterative"
    (doubling Cesaro averages), or "both" (run both, cross-check to 1e-7,
    report the spectral result with the agreement distance). ``sv_rtol`` is
    the fixed-space detection threshold of the spectral mode; callers working
    with maps known only to ~1e-8 (e.g. projected samples) may loosen it.
    """
    if mode not in ("spectral", "iterative", "both"):
        raise ValueError(f"cesaro_idempotent: unknown mode {mode!r}")
    _require_unital_cp(phi, "cesaro_idempotent")
    s = phi.superop
    agreement = None
    if mode == "spectral":
        p = _spectral_ergodic_projection(s, sv_rtol)
    elif mode == "iterative":
        p, _ = _iterative_ergodic_projection(s)
    else:
        p = _spectral_ergodic_projection(s, sv_rtol)
        p_iter, _ = _iterative_ergodic_projection(s)
        agreement = frobenius(p - p_iter)
        if agreement > 1e-7:
            raise NonConvergenceError(
                f"cesaro_idempotent: spectral and iterative modes disagree ({agreement:.3e})",
                [(0, agreement)],
            )
    n = phi.dim_in
    e = ChannelMap.from_superop(p, n, n, cp_hint=phi.cp_hint)
    # Cesaro limits of CP maps are CP; hermitize away rounding drift.
    e = ChannelMap(n, n, herm(e.choi), cp_hint=e.cp_hint)
    residuals = {
        "idempotent": frobenius(e.superop @ e.superop - e.superop),
        "absorb_left": frobenius(s @ e.superop - e.superop),
        "absorb_right": frobenius(e.superop @ s - e.superop),
    }
    return ErgodicResult(
        idempotent=e,
        fixed_space=fixed_space(phi, sv_rtol),
        method=mode,
        residuals=residuals,
        agreement=agreement,
    )


def unitalize_kraus(kraus) -> list[np.ndarray]:
    """Rescale Kraus operators so that sum_k B_k B_k^* = I (unital channel).

    B_k = M^{-1/2} A_k with M = sum_k A_k A_k^*; requires M nonsingular.
    """
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    m = sum(a @ a.conj().T for a in ops)
    eig = hermitian_eig(herm(m))
    if eig.values[0] <= 1e-12 * max(1.0, eig.values[-1]):
        raise ValueError("unitalize_kraus: sum_k A_k A_k^* is singular")
    inv_half = (eig.vectors * (eig.values**-0.5)) @ eig.vectors.conj().T
    return [inv_half @ a for a in ops]


def random_unital_channel(rng: np.random.Generator, n: int, n_kraus: int = 3) -> ChannelMap:
    """Random unital CP map on M_n from complex-Gaussian Kraus operators, unitalized."""
    ops = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(n_kraus)]
    return ChannelMap.from_kraus(unitalize_kraus(ops))


def check_absorption(e: ChannelMap, phi: ChannelMap, k_max: int = 20) -> float:
    """max_{1<=k<=k_max} || e phi^k e - e ||_F for an ergodic idempotent e of phi.

    Preconditions (checked to 1e-7): e is idempotent and absorbs phi on both
    sides, which makes the returned value a numerical-consistency certificate.
    """
    se, sp = e.superop, phi.superop
    if se.shape != sp.shape:
        raise ValueError("check_absorption: dimension mismatch")
    idem_res = frobenius(se @ se - se)
    left = frobenius(sp @ se - se)
    right = frobenius(se @ sp - se)
    worst = max(idem_res, left, right)
    if worst > 1e-7:
        raise ValueError(f"check_absorption: precondition violated (residual {worst:.3e})")
    out = 0.0
    spk = np.eye(sp.shape[0])
    for _ in range(k_max):
        spk = sp @ spk
        out = max(out, frobenius(se @ spk @ se - se))
    return out
