"""Standard operators, state families, random states and the state file format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadDimension, BadParameter, CapExceeded, DimensionMismatch, ParseError
from .operators import (
    HERMITIAN_TOL,
    BipartiteOperator,
    PureVector,
    herm_eig,
    partial_transpose,
    permute_to_bipartite,
)

TENSOR_POWER_CAP = 4096
STATE_FILE_SUFFIX = ".qstate.json"


@dataclass(frozen=True)
class DensityMatrix(BipartiteOperator):
    """A BipartiteOperator that is Hermitian, PSD and has unit trace (all to 1e-9)."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_hermitian():
            raise BadParameter("density matrix is not Hermitian")
        if not self.has_unit_trace():
            raise BadParameter(f"density matrix has trace {self.trace():.12g}, expected 1")
        lo = self.min_eigenvalue()
        if lo < -HERMITIAN_TOL:
            raise BadParameter(f"density matrix has negative eigenvalue {lo:.3e}")

    @classmethod
    def from_operator(cls, op: BipartiteOperator) -> "DensityMatrix":
        if isinstance(op, DensityMatrix):
            return op
        return cls(op.matrix, op.dim_a, op.dim_b)


def is_density(op: BipartiteOperator, tol: float = HERMITIAN_TOL) -> bool:
    return op.is_hermitian(tol) and op.has_unit_trace(tol) and op.min_eigenvalue() >= -tol


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise BadDimension(f"local dimension must be an integer >= 2, got {d}")


def omega_vector(d: int) -> np.ndarray:
    """Unnormalized ``sum_i |ii>``."""
    v = np.zeros(d * d)
    v[:: d + 1] = 1.0
    return v


def max_entangled(d: int) -> BipartiteOperator:
    """Projector ``P_+ = (1/d) sum_ij |ii><jj|``."""
    _check_d(d)
    w = omega_vector(d)
    return BipartiteOperator(np.outer(w, w) / d, d, d)


def flip_operator(d: int) -> BipartiteOperator:
    """Swap ``V = sum_ij |ij><ji|``."""
    _check_d(d)
    v = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            v[i * d + j, j * d + i] = 1.0
    return BipartiteOperator(v, d, d)


def sym_antisym(d: int) -> tuple[BipartiteOperator, BipartiteOperator]:
    """Projectors onto the symmetric and antisymmetric subspaces of ``C^d (x) C^d``."""
    _check_d(d)
    one = np.eye(d * d)
    v = flip_operator(d).matrix
    return BipartiteOperator((one + v) / 2, d, d), BipartiteOperator((one - v) / 2, d, d)


def diag_projector_z(d: int) -> BipartiteOperator:
    """``Z = sum_i |ii><ii|``."""
    _check_d(d)
    return BipartiteOperator(np.diag(omega_vector(d)), d, d)


def maximally_mixed(dim_a: int, dim_b: int | None = None) -> DensityMatrix:
    dim_b = dim_a if dim_b is None else dim_b
    n = dim_a * dim_b
    return DensityMatrix(np.eye(n) / n, dim_a, dim_b)


def werner(d: int, alpha: float) -> DensityMatrix:
    """Werner state ``(1 + alpha V) / (d^2 + alpha d)`` for ``alpha`` in [-1, 1].

    NPT exactly when ``alpha < -1/d``.
    """
    _check_d(d)
    if not -1.0 <= alpha <= 1.0:
        raise BadParameter(f"werner alpha must lie in [-1, 1], got {alpha}")
    m = (np.eye(d * d) + alpha * flip_operator(d).matrix) / (d * d + alpha * d)
    return DensityMatrix(m, d, d)


def isotropic(d: int, fidelity: float) -> DensityMatrix:
    """Isotropic state ``F P_+ + (1 - F)(1 - P_+)/(d^2 - 1)``."""
    _check_d(d)
    if not 0.0 <= fidelity <= 1.0:
        raise BadParameter(f"isotropic fidelity must lie in [0, 1], got {fidelity}")
    p = max_entangled(d).matrix
    m = fidelity * p + (1 - fidelity) * (np.eye(d * d) - p) / (d * d - 1)
    return DensityMatrix(m, d, d)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int seed (a Generator is passed through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def child_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream ``index`` derived from ``master_seed``.

    Equivalent to ``SeedSequence(master_seed).spawn(...)[index]``, so the
    stream for a given index does not depend on how many were spawned.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar-random unitary via QR with the phase correction of Mezzadri."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(dim_a: int, dim_b: int, rank: int | None = None, seed=0) -> DensityMatrix:
    n = dim_a * dim_b
    rank = n if rank is None else rank
    if not 1 <= rank <= n:
        raise BadParameter(f"rank must lie in [1, {n}], got {rank}")
    g = _ginibre(make_rng(seed), n, rank)
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real, dim_a, dim_b)


def random_rank2_vector(dim_a: int, dim_b: int, seed=0) -> PureVector:
    if min(dim_a, dim_b) < 2:
        raise BadParameter("a Schmidt rank-2 vector needs both local dimensions >= 2")
    rng = make_rng(seed)
    a, _ = np.linalg.qr(_ginibre(rng, dim_a, 2))
    b, _ = np.linalg.qr(_ginibre(rng, dim_b, 2))
    # keep both coefficients away from zero so the rank is unambiguous
    c = 0.1 + rng.random(2)
    c = c / np.linalg.norm(c)
    v = c[0] * np.kron(a[:, 0], b[:, 0]) + c[1] * np.kron(a[:, 1], b[:, 1])
    return PureVector.normalized(v, dim_a, dim_b)


def tensor_power(rho: BipartiteOperator, n: int, cap: int = TENSOR_POWER_CAP) -> BipartiteOperator:
    """``rho^{(x)n}`` regrouped as an ``(dim_a^n) x (dim_b^n)`` operator.

    Returns a DensityMatrix when ``rho`` is one.
    """
    if n < 1:
        raise BadParameter(f"number of copies must be >= 1, got {n}")
    side = rho.size**n
    if side > cap:
        raise CapExceeded(f"{n} copies of a {rho.dim_a}x{rho.dim_b} state have dimension {side} > cap {cap}")
    if n == 1:
        return rho
    m = rho.matrix
    for _ in range(n - 1):
        m = np.kron(m, rho.matrix)
    op = permute_to_bipartite(m, rho.dim_a, rho.dim_b, n)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(op.matrix, op.dim_a, op.dim_b)
    return op


def min_pt_eigenvalue(rho: BipartiteOperator) -> float:
    return float(herm_eig(partial_transpose(rho, "B"))[0][0])


def is_ppt(rho: BipartiteOperator, tol: float = HERMITIAN_TOL) -> bool:
    return min_pt_eigenvalue(rho) >= -tol


# -- file format -------------------------------------------------------------

def operator_to_json(op: BipartiteOperator, **extra) -> dict:
    doc = {
        "dims": [op.dim_a, op.dim_b],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in op.matrix],
    }
    doc.update(extra)
    return doc


def operator_from_json(doc) -> BipartiteOperator:
    if not isinstance(doc, dict):
        raise ParseError("top level: expected a JSON object")
    dims = doc.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 2
        or not all(isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in dims)
    ):
        raise ParseError(f"field 'dims': expected two positive integers, got {dims!r}")
    rows = doc.get("matrix")
    n = dims[0] * dims[1]
    if not isinstance(rows, list):
        raise ParseError("field 'matrix': expected a list of rows")
    if len(rows) != n:
        raise DimensionMismatch(f"field 'matrix': {len(rows)} rows, dims require {n}")
    out = np.empty((n, n), dtype=complex)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise DimensionMismatch(f"field 'matrix' row {r}: expected {n} entries")
        for c, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ParseError(f"field 'matrix' entry [{r}][{c}]: expected [re, im], got {entry!r}")
            if not all(math.isfinite(x) for x in entry):
                raise ParseError(f"field 'matrix' entry [{r}][{c}]: non-finite value")
            out[r, c] = complex(entry[0], entry[1])
    return BipartiteOperator(out, dims[0], dims[1])


def read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def save_state(path, m: BipartiteOperator, **extra) -> None:
    """Write ``m`` as ``{"dims": [dA, dB], "matrix": [[[re, im], ...], ...]}``.

    Floats go through ``repr`` round-tripping in :mod:`json`, so loading
    gives back bit-identical entries.
    """
    Path(path).write_text(json.dumps(operator_to_json(m, **extra)))


def load_state(path) -> BipartiteOperator:
    return operator_from_json(read_json(path))
