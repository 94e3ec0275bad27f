"""Minimization of <psi|M|psi> over unit vectors of bounded Schmidt rank.

The search alternates between the two tensor factors. With a fixed
k-dimensional subspace on one side, the best vector supported on
``span(W) (x) C^d`` is the lowest eigenvector of the compressed operator,
and it has Schmidt rank at most k. Its Schmidt vectors on the opposite
side then fix the next compression. The previous iterate always stays
feasible, so the value never increases. Random restarts take care of the
non-convexity; every restart draws from its own child stream of the
master seed, which makes the result independent of execution order.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadParameter, DimensionMismatch
from .operators import BipartiteOperator, PureVector, herm_eig, schmidt, schmidt_rank
from .states import child_rng

TIE_TOL = 1e-14
CERTIFICATE_TOL = 1e-10


@dataclass(frozen=True)
class SearchParams:
    restarts: int = 64
    max_iters: int = 200
    conv_tol: float = 1e-10
    neg_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise BadParameter("restarts and max_iters must be positive")
        if not (0 < self.conv_tol < self.neg_tol):
            raise BadParameter("need 0 < conv_tol < neg_tol")
        if self.seed < 0:
            raise BadParameter("seed must be non-negative")

    def replace(self, **changes) -> "SearchParams":
        return SearchParams(**{**asdict(self), **changes})


class VerdictKind(str, enum.Enum):
    VIOLATION = "ViolationFound"
    NO_VIOLATION = "NoViolationFound"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a rank-constrained search.

    ``VIOLATION`` is a certificate: ``certificate`` is a unit vector of
    Schmidt rank <= ``k`` with ``<psi|M|psi> = value < -neg_tol``.
    ``NO_VIOLATION`` only says the search did not find one.
    """

    kind: VerdictKind
    value: float
    params: SearchParams
    k: int = 2
    copies: int = 1
    certificate: PureVector | None = None
    warning: str | None = None
    source: str = ""
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def violation(self) -> bool:
        return self.kind is VerdictKind.VIOLATION

    def check_certificate(self, m: BipartiteOperator) -> float:
        """Re-evaluate the certificate on ``m`` and return the absolute discrepancy."""
        if self.certificate is None:
            raise ValueError("verdict carries no certificate")
        v = self.certificate.amplitudes
        direct = float(np.vdot(v, m.matrix @ v).real)
        return abs(direct - self.value)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "value": self.value,
            "k": self.k,
            "copies": self.copies,
            "source": self.source,
            "warning": self.warning,
            "params": asdict(self.params),
        }
        if self.certificate is not None:
            sf = schmidt(self.certificate)
            out["certificate"] = {
                "dims": [self.certificate.dim_a, self.certificate.dim_b],
                "schmidt_coefficients": [float(c) for c in sf.coefficients[: self.k]],
                "amplitudes": [[float(z.real), float(z.imag)] for z in self.certificate.amplitudes],
            }
        out.update(self.extras)
        return out


def thread_count() -> int:
    raw = os.environ.get("QDISTILL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _lowest(h: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return float(w[0]), v[:, 0]


def _random_isometry(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    q, _ = np.linalg.qr(g)
    return q


def _descend(m: np.ndarray, da: int, db: int, k: int, w: np.ndarray, p: SearchParams):
    eye_a, eye_b = np.eye(da), np.eye(db)
    best, psi = math.inf, None
    for _ in range(p.max_iters):
        ka = np.kron(w, eye_b)
        val, x = _lowest(ka.conj().T @ m @ ka)
        psi = ka @ x
        _, _, vh = np.linalg.svd(psi.reshape(da, db), full_matrices=False)
        kb = np.kron(eye_a, vh[:k].T)
        val, y = _lowest(kb.conj().T @ m @ kb)
        psi = kb @ y
        u, _, _ = np.linalg.svd(psi.reshape(da, db), full_matrices=False)
        w = u[:, :k]
        done = best - val < p.conv_tol
        best = min(best, val)
        if done:
            break
    return best, psi


def _start_from(vector: PureVector, k: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(vector.coefficient_matrix, full_matrices=False)
    return u[:, :k]


def rank_constrained_min(
    m: BipartiteOperator,
    k: int = 2,
    params: SearchParams | None = None,
    initial_vectors=(),
) -> Verdict:
    """Heuristic minimum of ``<psi|M|psi>`` over unit psi with Schmidt rank <= k.

    Parameters
    ----------
    m : BipartiteOperator
        Hermitian operator (within 1e-9).
    k : int
        Schmidt-rank bound. When ``k >= min(dim_a, dim_b)`` the constraint is
        void and the exact lowest eigenvalue is returned.
    params : SearchParams
        Restart budget, tolerances and master seed.
    initial_vectors : sequence of PureVector
        Extra warm starts, run after the random restarts.

    Returns
    -------
    Verdict
        The best value over all starts. Ties within 1e-14 go to the earliest
        start.
    """
    p = params or SearchParams()
    if k < 1:
        raise BadParameter(f"k must be >= 1, got {k}")
    da, db = m.dims
    w, v = herm_eig(m)
    mat = (m.matrix + m.matrix.conj().T) / 2

    if k >= min(da, db):
        return _verdict(float(w[0]), PureVector(v[:, 0], da, db), p, k, "exact")

    for vec in initial_vectors:
        if (vec.dim_a, vec.dim_b) != (da, db):
            raise DimensionMismatch("warm-start vector dims do not match the operator")

    def run_restart(i: int):
        w0 = _random_isometry(child_rng(p.seed, i), da, k)
        return _descend(mat, da, db, k, w0, p)

    threads = min(thread_count(), p.restarts)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_restart, range(p.restarts)))
    else:
        results = [run_restart(i) for i in range(p.restarts)]
    sources = [f"restart {i}" for i in range(p.restarts)]
    for j, vec in enumerate(initial_vectors):
        results.append(_descend(mat, da, db, k, _start_from(vec, k), p))
        sources.append(f"warm start {j}")

    best_i = 0
    for i in range(1, len(results)):
        if results[i][0] < results[best_i][0] - TIE_TOL:
            best_i = i
    val, psi = results[best_i]
    return _verdict(val, PureVector.normalized(psi, da, db), p, k, sources[best_i])


def _verdict(value: float, psi: PureVector, p: SearchParams, k: int, source: str) -> Verdict:
    if value < -p.neg_tol:
        if schmidt_rank(psi) > k:
            raise AssertionError("search produced a certificate above the Schmidt-rank bound")
        return Verdict(VerdictKind.VIOLATION, value, p, k=k, certificate=psi, source=source)
    warning = None
    if value < 0:
        warning = f"value {value:.3e} is negative but within neg_tol={p.neg_tol:g}"
    return Verdict(VerdictKind.NO_VIOLATION, value, p, k=k, warning=warning, source=source)
