"""Dense linear algebra on bipartite spaces.

Basis convention used everywhere in the package: the product vector
``|i>_A (x) |j>_B`` sits at index ``i * dim_b + j`` (row-major, the same
ordering ``numpy.kron`` produces).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotHermitian

HERMITIAN_TOL = 1e-9
SCHMIDT_TOL = 1e-9
# Tensor-power regroupings up to this side length use an explicit permutation
# matrix; larger ones fall back to index remapping.
PERMUTATION_MATRIX_MAX_DIM = 81


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BipartiteOperator:
    """A square complex matrix acting on ``C^dim_a (x) C^dim_b``.

    No physical constraint is implied: witnesses are not positive and maps
    need not preserve trace. Use the ``is_*`` predicates to test for them.
    """

    matrix: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise DimensionMismatch(f"dimensions must be positive, got {self.dim_a}x{self.dim_b}")
        m = np.asarray(self.matrix)
        n = self.dim_a * self.dim_b
        if m.shape != (n, n):
            raise DimensionMismatch(
                f"matrix of shape {m.shape} does not match dims {self.dim_a}x{self.dim_b}"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    @property
    def size(self) -> int:
        return self.dim_a * self.dim_b

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def min_eigenvalue(self) -> float:
        return float(herm_eig(self.matrix)[0][0])

    def is_psd(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.is_hermitian(tol) and self.min_eigenvalue() >= -tol

    def has_unit_trace(self, tol: float = HERMITIAN_TOL) -> bool:
        return abs(self.trace() - 1.0) <= tol

    def expectation(self, vector) -> float:
        """Real part of ``<v|M|v>`` for a PureVector or plain array."""
        v = vector.amplitudes if isinstance(vector, PureVector) else np.asarray(vector)
        return float(np.vdot(v, self.matrix @ v).real)


@dataclass(frozen=True)
class PureVector:
    amplitudes: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        v = np.asarray(self.amplitudes).reshape(-1)
        if v.shape[0] != self.dim_a * self.dim_b:
            raise DimensionMismatch(
                f"vector of length {v.shape[0]} does not match dims {self.dim_a}x{self.dim_b}"
            )
        object.__setattr__(self, "amplitudes", _frozen(v))

    @classmethod
    def normalized(cls, amplitudes, dim_a: int, dim_b: int) -> "PureVector":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / norm, dim_a, dim_b)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``dim_a x dim_b``: ``psi = sum_ij C_ij |i>|j>``."""
        return self.amplitudes.reshape(self.dim_a, self.dim_b)

    def projector(self) -> BipartiteOperator:
        return BipartiteOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dim_a, self.dim_b)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class SchmidtForm:
    """``psi = sum_k c_k |a_k> (x) |b_k>``; vectors are stored as columns."""

    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > SCHMIDT_TOL))

    def reconstruct(self) -> np.ndarray:
        c = self.left_vectors @ np.diag(self.coefficients) @ self.right_vectors.T
        return c.reshape(-1)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def _as_operator(m, dims=None) -> BipartiteOperator:
    if isinstance(m, BipartiteOperator):
        return m
    if dims is None:
        raise DimensionMismatch("plain matrices need explicit dims")
    return BipartiteOperator(np.asarray(m), *dims)


def partial_transpose(m: BipartiteOperator, subsystem: str = "B") -> BipartiteOperator:
    """Transpose one tensor factor.

    ``(ik|M^{T_B}|jl) = (il|M|jk)``; ``subsystem="A"`` swaps the A indices
    instead.
    """
    da, db = m.dims
    t = m.matrix.reshape(da, db, da, db)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return BipartiteOperator(t.reshape(da * db, da * db), da, db)


def partial_trace(m: BipartiteOperator, subsystem: str = "A") -> np.ndarray:
    """Trace out one factor and return the reduced matrix on the other."""
    da, db = m.dims
    t = m.matrix.reshape(da, db, da, db)
    if subsystem == "A":
        return np.einsum("ijil->jl", t)
    if subsystem == "B":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def herm_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and the eigenvectors as columns. The input
    is symmetrized before solving; deviations from Hermiticity larger than
    ``HERMITIAN_TOL`` (max-abs entry of ``M - M^dagger``) raise NotHermitian.
    """
    m = m.matrix if isinstance(m, BipartiteOperator) else np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T), initial=0.0)
    if dev > HERMITIAN_TOL:
        raise NotHermitian(f"matrix deviates from Hermitian by {dev:.3e}")
    return np.linalg.eigh((m + m.conj().T) / 2)


def schmidt(v: PureVector) -> SchmidtForm:
    u, s, vh = np.linalg.svd(v.coefficient_matrix, full_matrices=False)
    return SchmidtForm(s, u, vh.T)


def schmidt_rank(v: PureVector, tol: float = SCHMIDT_TOL) -> int:
    s = np.linalg.svd(v.coefficient_matrix, compute_uv=False)
    return int(np.count_nonzero(s > tol))


def _pair_to_bipartite_perm(dim_a: int, dim_b: int, n: int) -> np.ndarray:
    # Index i of the result (A_1..A_n B_1..B_n order) reads entry perm[i]
    # of the pair-ordered space (A_1 B_1 .. A_n B_n).
    shape = (dim_a, dim_b) * n
    idx = np.arange((dim_a * dim_b) ** n).reshape(shape)
    axes = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return idx.transpose(axes).reshape(-1)


def _apply_perm(m: np.ndarray, perm: np.ndarray) -> np.ndarray:
    side = perm.shape[0]
    if side <= PERMUTATION_MATRIX_MAX_DIM:
        p = np.zeros((side, side))
        p[np.arange(side), perm] = 1.0
        return p @ m @ p.T
    return m[np.ix_(perm, perm)]


def permute_to_bipartite(m, dim_a: int, dim_b: int, n: int) -> BipartiteOperator:
    """Regroup an operator on ``(A (x) B)^{(x)n}`` as an ``A^n | B^n`` operator.

    ``m`` is in pair order ``A_1 B_1 A_2 B_2 ...`` (what repeated ``kron``
    gives); the result has all A factors first.
    """
    m = np.asarray(m.matrix if isinstance(m, BipartiteOperator) else m)
    side = (dim_a * dim_b) ** n
    if m.shape != (side, side):
        raise DimensionMismatch(f"expected side {side} for n={n} copies of {dim_a}x{dim_b}, got {m.shape}")
    perm = _pair_to_bipartite_perm(dim_a, dim_b, n)
    return BipartiteOperator(_apply_perm(m, perm), dim_a**n, dim_b**n)


def permute_to_pairs(m: BipartiteOperator, dim_a: int, dim_b: int, n: int) -> np.ndarray:
    """Inverse of :func:`permute_to_bipartite`; returns the pair-ordered matrix."""
    if m.dims != (dim_a**n, dim_b**n):
        raise DimensionMismatch(f"operator dims {m.dims} are not ({dim_a}^{n}, {dim_b}^{n})")
    perm = np.argsort(_pair_to_bipartite_perm(dim_a, dim_b, n))
    return _apply_perm(m.matrix, perm)


def vector_to_bipartite(v, dim_a: int, dim_b: int, n: int) -> PureVector:
    """Pair-ordered vector on ``(A (x) B)^{(x)n}`` regrouped as ``A^n | B^n``."""
    v = np.asarray(v).reshape(-1)
    perm = _pair_to_bipartite_perm(dim_a, dim_b, n)
    return PureVector(v[perm], dim_a**n, dim_b**n)
