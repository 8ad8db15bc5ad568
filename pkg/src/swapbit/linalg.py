"""Dense complex linear-algebra kernel for small bipartite operator problems.

Everything here works on plain ``numpy`` arrays (``complex128``) and is a
pure function of its inputs: no caches, no global state, safe to call from
several threads at once. Hilbert spaces in this package stay below a few
thousand dimensions, so dense storage is used throughout.

Bipartite convention: a matrix on a factorized space A (x) B is stored with
the A index major, i.e. row ``i * dim_b + a`` addresses ``|i>_A |a>_B``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

#: Largest admissible dimension for Kronecker products (guards sweeps that
#: would otherwise silently allocate gigabytes).
MAX_DIM = 1 << 16

#: Max-abs deviation tolerated when an input must be Hermitian.
HERMITICITY_TOL = 1e-10

#: Tolerance on trace deviation and eigenvalue floor for density operators.
DENSITY_TOL = 1e-10


class TensorFactorization(NamedTuple):
    """Bipartite splitting of a Hilbert space into factors A and B."""

    dim_a: int
    dim_b: int

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce input to a 2-D complex array, rejecting non-finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def _factorized(m, f: TensorFactorization, name: str = "matrix") -> np.ndarray:
    a = as_complex_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if f.dim_a < 1 or f.dim_b < 1 or a.shape[0] != f.dim:
        raise ValueError(
            f"{name} has dimension {a.shape[0]}, expected "
            f"{f.dim_a} x {f.dim_b} = {f.dim}"
        )
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product with a guard against runaway output dimensions."""
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape[0] * b.shape[0] > MAX_DIM or a.shape[1] * b.shape[1] > MAX_DIM:
        raise ValueError(
            f"Kronecker product of shapes {a.shape} and {b.shape} "
            f"exceeds MAX_DIM = {MAX_DIM}"
        )
    return np.kron(a, b)


def partial_trace_b(m, f: TensorFactorization) -> np.ndarray:
    """Trace out the second factor: result[i, j] = sum_a m[(i, a), (j, a)]."""
    a = _factorized(m, f)
    t = a.reshape(f.dim_a, f.dim_b, f.dim_a, f.dim_b)
    return np.einsum("iaja->ij", t)


def partial_trace_a(m, f: TensorFactorization) -> np.ndarray:
    """Trace out the first factor: result[a, b] = sum_i m[(i, a), (i, b)]."""
    x = _factorized(m, f)
    t = x.reshape(f.dim_a, f.dim_b, f.dim_a, f.dim_b)
    return np.einsum("iaib->ab", t)


def partial_transpose_b(m, f: TensorFactorization) -> np.ndarray:
    """Transpose the second factor inside each (i, j) block of the first.

    Involutive: applying it twice returns the input exactly, since the map
    is a permutation of matrix entries.
    """
    a = _factorized(m, f)
    t = a.reshape(f.dim_a, f.dim_b, f.dim_a, f.dim_b)
    return t.transpose(0, 3, 2, 1).reshape(f.dim, f.dim)


def is_hermitian(m, tol: float = HERMITICITY_TOL) -> bool:
    a = as_complex_matrix(m)
    return a.shape[0] == a.shape[1] and np.abs(a - a.conj().T).max() <= tol


def hermitian_eigen(m, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and the matching eigenvector
    columns. Each column is rephased so that its first component whose
    magnitude exceeds 1e-12 is real positive; this pins the arbitrary
    eigenvector phase and keeps repeated runs byte-reproducible.

    Raises ``ValueError`` when the input deviates from Hermitian by more
    than ``tol``. LAPACK convergence failures (not observed at these
    dimensions) surface as ``np.linalg.LinAlgError``.
    """
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1] or np.abs(a - a.conj().T).max() > tol:
        raise ValueError(f"input is not Hermitian within {tol}")
    evals, evecs = np.linalg.eigh(a)
    evecs = np.array(evecs)
    for col in range(evecs.shape[1]):
        v = evecs[:, col]
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size:
            anchor = v[nz[0]]
            evecs[:, col] = v * (anchor.conjugate() / abs(anchor))
    return evals, evecs


def trace_norm(m, tol: float = HERMITICITY_TOL) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1] or np.abs(a - a.conj().T).max() > tol:
        raise ValueError("trace_norm is defined here for Hermitian input only")
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def trace_distance(r0, r1) -> float:
    """(1/2) ||r0 - r1||_1 for Hermitian operators of equal dimension."""
    a = as_complex_matrix(r0, "r0")
    b = as_complex_matrix(r1, "r1")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return 0.5 * trace_norm(a - b)


def require_density(rho, tol: float = DENSITY_TOL, name: str = "rho") -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, PSD within ``tol``."""
    a = as_complex_matrix(rho, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if np.abs(a - a.conj().T).max() > tol:
        raise ValueError(f"{name} is not Hermitian within {tol}")
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} has trace {tr:.6g}, expected 1")
    low = float(np.linalg.eigvalsh(a).min())
    if low < -tol:
        raise ValueError(f"{name} has eigenvalue {low:.6g} below -{tol}")
    return a
