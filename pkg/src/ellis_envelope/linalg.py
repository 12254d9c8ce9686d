"""Dense complex-matrix primitives shared by every other module.

Matrices are numpy ``complex128`` arrays, row-major, and ``vec`` always means
row-major flattening (``m.reshape(-1)``).  Subspaces of M_n are stored as
stacks of matrices that are orthonormal under the Frobenius inner product
``<a, b> = tr(a^* b)``, which coincides with the l2 inner product of their
vectorizations.

Tolerance hierarchy: 1e-10 for algebraic identities, 1e-8 for iterative
limits, 1e-6 for subspace/certificate reporting.  Callers may override per
call; these are the defaults used across the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL_ALGEBRAIC = 1e-10
ATOL_ITERATIVE = 1e-8
ATOL_REPORT = 1e-6

# Relative cutoffs fixed by the module contracts.
HERMITICITY_RTOL = 1e-9
ORTHONORMALIZE_DROP_RTOL = 1e-10


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def herm(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a^*)/2."""
    return 0.5 * (a + a.conj().T)


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=complex).reshape(-1)


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(rows, cols)


def as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a 2d complex128 array, optionally enforcing the shape."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
    if rows is not None and m.shape != (rows, cols):
        raise ValueError(f"expected shape {(rows, cols)}, got {m.shape}")
    return m


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition a = V diag(w) V^* with w ascending and V unitary."""

    values: np.ndarray
    vectors: np.ndarray


def hermitian_eig(a: np.ndarray, rtol: float = HERMITICITY_RTOL) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    Raises ValueError if the input is not square or deviates from Hermitian
    by more than ``rtol * max(1, ||a||_F)``.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"hermitian_eig: matrix is {n}x{m}, not square")
    dev = frobenius(a - a.conj().T)
    if dev > rtol * max(1.0, frobenius(a)):
        raise ValueError(f"hermitian_eig: not Hermitian (||a - a^*||_F = {dev:.3e})")
    w, v = np.linalg.eigh(herm(a))
    return HermitianEig(values=w, vectors=v)


def psd_project(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix: clip negative eigenvalues."""
    eig = hermitian_eig(a)
    w = np.clip(eig.values, 0.0, None)
    return herm((eig.vectors * w) @ eig.vectors.conj().T)


@dataclass(frozen=True)
class SubspaceBasis:
    """Frobenius-orthonormal basis of a subspace of M_n.

    ``mats`` has shape (dim, n, n); ``ambient_dim`` is n^2, the dimension of
    the ambient matrix space.
    """

    mats: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mats, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError(f"SubspaceBasis: expected (k, n, n) stack, got {m.shape}")
        object.__setattr__(self, "mats", m)

    @property
    def dim(self) -> int:
        return self.mats.shape[0]

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.n * self.n

    def vecs(self) -> np.ndarray:
        """Row-stacked vectorizations, shape (dim, n^2)."""
        return self.mats.reshape(self.dim, -1)

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace, acting on vectorized matrices."""
        v = self.vecs()
        return v.T @ v.conj()

    def project(self, a: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a matrix onto the subspace."""
        v = self.vecs()
        coeff = v.conj() @ vec(a)
        return unvec(coeff @ v, self.n, self.n)

    def distance(self, a: np.ndarray) -> float:
        """Frobenius distance from a matrix to the subspace."""
        return frobenius(as_matrix(a, self.n, self.n) - self.project(a))

    def contains(self, a: np.ndarray, tol: float = ATOL_ITERATIVE) -> bool:
        return self.distance(a) <= tol


def orthonormalize(mats, drop_rtol: float = ORTHONORMALIZE_DROP_RTOL) -> SubspaceBasis:
    """Gram-Schmidt a list of matrices into a SubspaceBasis.

    Modified Gram-Schmidt with one reorthogonalization pass; vectors whose
    residual norm falls below ``drop_rtol * max input norm`` are dropped, so
    the output dimension is the numerical rank of the span.
    """
    arr = [as_matrix(m) for m in mats]
    if not arr:
        raise ValueError("orthonormalize: empty input")
    n = arr[0].shape[0]
    for m in arr:
        if m.shape != (n, n):
            raise ValueError("orthonormalize: mixed matrix shapes")
    scale = max(frobenius(m) for m in arr)
    if scale == 0.0:
        raise ValueError("orthonormalize: all inputs are zero")
    kept: list[np.ndarray] = []
    for m in arr:
        v = vec(m)
        for _ in range(2):
            for b in kept:
                v = v - (b.conj() @ v) * b
        norm = np.linalg.norm(v)
        if norm >= drop_rtol * scale:
            kept.append(v / norm)
    if not kept:
        raise ValueError("orthonormalize: span is numerically zero")
    return SubspaceBasis(np.stack(kept).reshape(len(kept), n, n))


def subspace_equal(a: SubspaceBasis, b: SubspaceBasis, tol: float = ATOL_REPORT) -> tuple[bool, float]:
    """Compare subspaces via their orthogonal projectors.

    Returns (equal within tol, Frobenius distance of the projectors).
    """
    if a.n != b.n:
        raise ValueError("subspace_equal: ambient dimensions differ")
    va, vb = a.vecs(), b.vecs()
    pa = va.T @ va.conj()
    pb = vb.T @ vb.conj()
    dist = frobenius(pa - pb)
    return dist <= tol, dist


def matrix_to_json(a: np.ndarray) -> dict:
    """Encode a matrix as {"rows", "cols", "data"} with row-major [re, im] pairs."""
    a = as_matrix(a)
    flat = vec(a)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"matrix json: missing field ({exc})") from exc
    if rows <= 0 or cols <= 0:
        raise ValueError(f"matrix json: bad shape {rows}x{cols}")
    if len(data) != rows * cols:
        raise ValueError(f"matrix json: expected {rows * cols} entries, got {len(data)}")
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    return flat.reshape(rows, cols)
