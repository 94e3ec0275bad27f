"""Linear maps on operators, their Jamiolkowski operators, and distillation witnesses.

Conventions
-----------
The Jamiolkowski operator of a map ``L: B(C^d_in) -> B(C^d_out)`` is

    D = d (1 (x) L)(P_+) = sum_ij |i><j| (x) L(|i><j|),

an operator on ``C^d_in (x) C^d_out``; the inverse is
``L(X) = Tr_A[D (X^T (x) 1)]``. A vector witness ``|psi><psi|^{T_B}`` is
stored without any factor of d, and :func:`two_decomposable_from_vectors`
is normalized so that its Jamiolkowski operator equals the witness sum
exactly (scalar 1).

For ``psi = sum_ij C_ij |i>|j>`` the matching two-decomposable map is
``X -> C^dagger X^T C``; in Schmidt form
``C^dagger = sum_k c_k |conj(b_k)><a_k|``, a rank-<=2 operator whenever psi
has Schmidt rank <= 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BadDimension, BadParameter, DimensionMismatch, ParseError, SchmidtRankTooHigh
from .operators import (
    SCHMIDT_TOL,
    BipartiteOperator,
    PureVector,
    herm_eig,
    partial_trace,
    partial_transpose,
    schmidt,
    schmidt_rank,
)
from .states import (
    diag_projector_z,
    flip_operator,
    max_entangled,
    operator_from_json,
    read_json,
    save_state,
)

NAMED_MAPS = ("Lambda1", "Lambda2", "Lambda3", "Lambda4", "Lambda5")


@dataclass(frozen=True)
class LinearMapRep:
    """``A -> sum_i V_i A V_i^dagger``, or ``sum_i V_i A^T V_i^dagger`` with ``pre_transpose``.

    Without the transpose flag the map is completely positive. With it, and
    every ``V_i`` of rank <= 2, the map is two-decomposable.
    """

    kraus: tuple
    pre_transpose: bool = False

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise BadParameter("a map needs at least one Kraus operator")
        shape = ks[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ks):
            raise DimensionMismatch("Kraus operators must be matrices of a common shape")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]

    def kraus_ranks(self, tol: float = SCHMIDT_TOL) -> list[int]:
        return [int(np.count_nonzero(np.linalg.svd(k, compute_uv=False) > tol)) for k in self.kraus]

    def is_two_decomposable(self) -> bool:
        return self.pre_transpose and max(self.kraus_ranks()) <= 2

    def __call__(self, x) -> np.ndarray:
        return apply_map(self, x)


@dataclass(frozen=True)
class ChoiMap:
    """Map given by its Jamiolkowski operator (used for maps without a Kraus form)."""

    op: BipartiteOperator

    @property
    def d_in(self) -> int:
        return self.op.dim_a

    @property
    def d_out(self) -> int:
        return self.op.dim_b

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.d_in, self.d_in):
            raise DimensionMismatch(f"map expects {self.d_in}x{self.d_in} input, got {x.shape}")
        prod = self.op.matrix @ np.kron(x.T, np.eye(self.d_out))
        return partial_trace(BipartiteOperator(prod, self.d_in, self.d_out), "A")


@dataclass(frozen=True)
class Witness:
    """Distillation witness ``D``.

    ``provenance`` is either a tuple of Schmidt rank-<=2 vectors with
    ``D = sum_i w_i |psi_i><psi_i|^{T_B}``, or the tag of a closed form.
    """

    op: BipartiteOperator
    provenance: tuple | str
    weights: tuple = ()

    def value(self, rho: BipartiteOperator) -> float:
        return float(np.trace(self.op.matrix @ rho.matrix).real)


def identity_map(d: int) -> LinearMapRep:
    return LinearMapRep((np.eye(d),))


def transpose_map(d: int) -> LinearMapRep:
    return LinearMapRep((np.eye(d),), pre_transpose=True)


def compose_transpose_after(m: LinearMapRep) -> LinearMapRep:
    """``T o m``: transpose the output of ``m``."""
    return LinearMapRep(tuple(k.conj() for k in m.kraus), pre_transpose=not m.pre_transpose)


def apply_map(m: LinearMapRep, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (m.d_in, m.d_in):
        raise DimensionMismatch(f"map expects {m.d_in}x{m.d_in} input, got {x.shape}")
    if m.pre_transpose:
        x = x.T
    return sum(k @ x @ k.conj().T for k in m.kraus)


def apply_extended(m, rho: BipartiteOperator, side: str = "right") -> BipartiteOperator:
    """``(1 (x) m)(rho)`` for ``side="right"``, ``(m (x) 1)(rho)`` for ``side="left"``."""
    da, db = rho.dims
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    target = db if side == "right" else da
    if m.d_in != target:
        raise DimensionMismatch(f"map acts on dimension {m.d_in}, factor has dimension {target}")

    if isinstance(m, LinearMapRep):
        x = rho
        if m.pre_transpose:
            x = partial_transpose(rho, "B" if side == "right" else "A")
        if side == "right":
            lifts = [np.kron(np.eye(da), k) for k in m.kraus]
            dims = (da, m.d_out)
        else:
            lifts = [np.kron(k, np.eye(db)) for k in m.kraus]
            dims = (m.d_out, db)
        return BipartiteOperator(sum(g @ x.matrix @ g.conj().T for g in lifts), *dims)

    # generic map action: apply block-wise on matrix units of the other factor
    t = rho.matrix.reshape(da, db, da, db)
    if side == "right":
        out = np.empty((da, m.d_out, da, m.d_out), dtype=complex)
        for i in range(da):
            for j in range(da):
                out[i, :, j, :] = m(t[i, :, j, :])
        return BipartiteOperator(out.reshape(da * m.d_out, da * m.d_out), da, m.d_out)
    out = np.empty((m.d_out, db, m.d_out, db), dtype=complex)
    for i in range(db):
        for j in range(db):
            out[:, i, :, j] = m(t[:, i, :, j])
    return BipartiteOperator(out.reshape(m.d_out * db, m.d_out * db), m.d_out, db)


def jamiolkowski_operator(m, d: int | None = None) -> BipartiteOperator:
    """``D = sum_ij |i><j| (x) m(|i><j|)`` (equal to ``d (1 (x) m) P_+``).

    ``m`` may be a LinearMapRep, a ChoiMap or any callable on ``d x d``
    matrices (then ``d`` is required).
    """
    if isinstance(m, ChoiMap):
        return m.op
    d_in = getattr(m, "d_in", None)
    if d is None:
        d = d_in
    if d is None:
        raise DimensionMismatch("input dimension required for a plain callable")
    if d_in is not None and d_in != d:
        raise DimensionMismatch(f"map input dimension {d_in} != {d}")
    blocks = {}
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1.0
            blocks[i, j] = np.asarray(m(e), dtype=complex)
    d_out = blocks[0, 0].shape[0]
    out = np.zeros((d, d_out, d, d_out), dtype=complex)
    for (i, j), b in blocks.items():
        out[i, :, j, :] = b
    return BipartiteOperator(out.reshape(d * d_out, d * d_out), d, d_out)


def map_from_operator(op: BipartiteOperator) -> ChoiMap:
    """The map ``X -> Tr_A[D (X^T (x) 1)]`` with Jamiolkowski operator ``D``."""
    return ChoiMap(op)


def adjoint(m: LinearMapRep) -> LinearMapRep:
    """Map with ``Tr(A m(B)) = Tr(adjoint(m)(A) B)`` for all A, B.

    Kraus operators become their daggers; under a pre-transpose the dagger
    picks up a complex conjugation, i.e. ``V -> V^T``.
    """
    if m.pre_transpose:
        return LinearMapRep(tuple(k.T for k in m.kraus), pre_transpose=True)
    return LinearMapRep(tuple(k.conj().T for k in m.kraus))


def _kraus_from_vector(psi: PureVector) -> np.ndarray:
    sf = schmidt(psi)
    v = np.zeros((psi.dim_b, psi.dim_a), dtype=complex)
    for c, a, b in zip(sf.coefficients, sf.left_vectors.T, sf.right_vectors.T):
        if c > SCHMIDT_TOL:
            v += c * np.outer(b.conj(), a.conj())
    return v


def two_decomposable_from_vectors(psis, weights=None) -> LinearMapRep:
    """Two-decomposable map whose Jamiolkowski operator is ``sum_i w_i |psi_i><psi_i|^{T_B}``.

    Each vector contributes one Kraus operator of rank <= 2 built from its
    Schmidt form. Vectors need not be normalized.
    """
    psis = list(psis)
    if not psis:
        raise BadParameter("at least one vector required")
    weights = [1.0] * len(psis) if weights is None else list(weights)
    if len(weights) != len(psis) or any(w < 0 for w in weights):
        raise BadParameter("weights must be non-negative and match the vectors")
    kraus = []
    for psi, w in zip(psis, weights):
        r = schmidt_rank(psi)
        if r > 2:
            raise SchmidtRankTooHigh(f"vector has Schmidt rank {r}")
        kraus.append(np.sqrt(w) * _kraus_from_vector(psi))
    return LinearMapRep(tuple(kraus), pre_transpose=True)


def witness_sum(vectors, weights=None) -> np.ndarray:
    """``sum_i w_i |psi_i><psi_i|`` as a plain matrix.

    Keeps the input dtype, so integer vectors give an exact integer result.
    """
    vectors = [np.asarray(getattr(v, "amplitudes", v)) for v in vectors]
    weights = [1] * len(vectors) if weights is None else weights
    return sum(w * np.outer(v, v.conj()) for v, w in zip(vectors, weights))


def witness_from_vector(psi: PureVector) -> Witness:
    """``D = |psi><psi|^{T_B}`` for a vector of Schmidt rank <= 2."""
    return witness_from_vectors([psi])


def witness_from_vectors(psis, weights=None) -> Witness:
    psis = list(psis)
    for psi in psis:
        r = schmidt_rank(psi)
        if r > 2:
            raise SchmidtRankTooHigh(f"vector has Schmidt rank {r}")
    da, db = psis[0].dim_a, psis[0].dim_b
    weights = tuple([1.0] * len(psis) if weights is None else weights)
    dtb = BipartiteOperator(witness_sum(psis, weights), da, db)
    return Witness(partial_transpose(dtb, "B"), tuple(psis), weights)


# -- the five named maps -----------------------------------------------------

def _check_tag(tag: str) -> str:
    norm = tag[0].upper() + tag[1:] if tag else tag
    if norm not in NAMED_MAPS:
        raise BadParameter(f"unknown map {tag!r}; expected one of {', '.join(NAMED_MAPS)}")
    return norm


def named_witness_vectors(tag: str, d: int) -> list[np.ndarray]:
    """Unnormalized integer Schmidt rank-2 vectors whose projectors sum to ``D^{T_B}``.

    Lambda1: |ij>-|ji>, Lambda2: |ij>+|ji>, Lambda3: |ii>+|jj>,
    Lambda4: |ii>-|jj>, all over i < j. Lambda5 has no such list here.
    """
    tag = _check_tag(tag)
    if tag == "Lambda5":
        raise BadParameter("Lambda5 is taken in closed form only")
    sign = -1 if tag in ("Lambda1", "Lambda4") else 1
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            v = np.zeros(d * d, dtype=np.int64)
            if tag in ("Lambda1", "Lambda2"):
                v[i * d + j] += 1
                v[j * d + i] += sign
            else:
                v[i * d + i] += 1
                v[j * d + j] += sign
            out.append(v)
    return out


def closed_form_witness(tag: str, d: int) -> BipartiteOperator:
    """``D`` for each named map, e.g. ``1 - d P_+`` for the reduction map."""
    tag = _check_tag(tag)
    if d < 2:
        raise BadDimension(f"d must be >= 2, got {d}")
    one = np.eye(d * d)
    dp = d * max_entangled(d).matrix
    v = flip_operator(d).matrix
    z = diag_projector_z(d).matrix
    m = {
        "Lambda1": one - dp,
        "Lambda2": one + dp - 2 * z,
        "Lambda3": v + (d - 2) * z,
        "Lambda4": -v + d * z,
        "Lambda5": (d - 2) * one + (2 * d - 1) * v,
    }[tag]
    return BipartiteOperator(m, d, d)


def closed_form_map(tag: str, d: int) -> Callable[[np.ndarray], np.ndarray]:
    tag = _check_tag(tag)
    one = np.eye(d)

    def diag(a):
        return np.diag(np.diag(a))

    forms = {
        "Lambda1": lambda a: np.trace(a) * one - a,
        "Lambda2": lambda a: np.trace(a) * one + a - 2 * diag(a),
        "Lambda3": lambda a: a.T + (d - 2) * diag(a),
        "Lambda4": lambda a: -a.T + d * diag(a),
        "Lambda5": lambda a: (d - 2) * np.trace(a) * one + (2 * d - 1) * a.T,
    }
    return forms[tag]


def _lambda5_kraus(d: int) -> tuple:
    # (d-2) Tr(A) 1 = (d-2) sum_ij e_ij A^T e_ji, and (2d-1) A^T uses Kraus sqrt(2d-1) 1.
    ks = [np.sqrt(2 * d - 1) * np.eye(d)]
    if d > 2:
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d))
                e[i, j] = np.sqrt(d - 2)
                ks.append(e)
    return tuple(ks)


def named_map(tag: str, d: int) -> tuple[LinearMapRep, Witness]:
    """Kraus form and witness of one of the maps Lambda1..Lambda5.

    Lambda1 is the reduction map ``Tr(A) 1 - A``. For Lambda1..Lambda4 the
    Kraus operators come from :func:`named_witness_vectors` and all have rank
    2. Lambda5 uses a rank-d Kraus operator; its witness is taken in closed
    form. Both forms are cross-checked against each other before returning.
    """
    tag = _check_tag(tag)
    if d < 2:
        raise BadDimension(f"d must be >= 2, got {d}")
    d_op = closed_form_witness(tag, d)
    if tag == "Lambda5":
        m = LinearMapRep(_lambda5_kraus(d), pre_transpose=True)
        w = Witness(d_op, tag)
    else:
        vecs = [PureVector(v, d, d) for v in named_witness_vectors(tag, d)]
        m = two_decomposable_from_vectors(vecs)
        w = witness_from_vectors(vecs)
        if np.max(np.abs(w.op.matrix - d_op.matrix)) > 1e-10:
            raise AssertionError(f"{tag}: vector witness disagrees with closed form")
    if np.max(np.abs(jamiolkowski_operator(m).matrix - d_op.matrix)) > 1e-10:
        raise AssertionError(f"{tag}: Kraus form disagrees with closed-form witness")
    return m, w


# -- T o S map and k-positivity ---------------------------------------------

def s_map_from_state(rho: BipartiteOperator) -> tuple[LinearMapRep, LinearMapRep]:
    """The CP map S with ``rho = (1 (x) S) P_+``, and ``T o S``.

    S is read off the eigen-decomposition of ``d rho``: eigenvector ``v``
    with coefficient matrix ``C`` gives the Kraus operator
    ``sqrt(lambda) C^T``.
    """
    if rho.dim_a != rho.dim_b:
        raise DimensionMismatch(f"S is defined for square states, got {rho.dim_a}x{rho.dim_b}")
    d = rho.dim_a
    w, v = herm_eig(d * rho.matrix)
    kraus = [
        np.sqrt(lam) * v[:, i].reshape(d, d).T
        for i, lam in enumerate(w)
        if lam > 1e-14
    ]
    if not kraus:
        raise BadParameter("state has no positive spectrum")
    s = LinearMapRep(tuple(kraus))
    return s, compose_transpose_after(s)


def is_k_positive(m, k: int, params=None, d: int | None = None):
    """Search for a Schmidt rank-<=k vector on which the Jamiolkowski operator is negative.

    A VIOLATION verdict proves ``m`` is not k-positive; NO_VIOLATION is
    heuristic and never a positivity certificate.
    """
    from .search import rank_constrained_min

    if k < 1:
        raise BadParameter(f"k must be >= 1, got {k}")
    return rank_constrained_min(jamiolkowski_operator(m, d), k, params)


# -- map files ---------------------------------------------------------------

def save_map(path, m, d: int | None = None) -> None:
    """Store the Jamiolkowski operator with ``"jamiolkowski_scale": d``."""
    op = jamiolkowski_operator(m, d)
    save_state(path, op, jamiolkowski_scale=op.dim_a)


def load_map(path) -> ChoiMap:
    """Read a map file; the stored operator is ``scale (1 (x) L) P_+``."""
    doc = read_json(path)
    op = operator_from_json(doc)
    scale = doc.get("jamiolkowski_scale")
    if isinstance(scale, bool) or not isinstance(scale, (int, float)) or not scale > 0:
        raise ParseError(f"field 'jamiolkowski_scale': expected a positive number, got {scale!r}")
    if scale != op.dim_a:
        op = BipartiteOperator(op.matrix * (op.dim_a / scale), op.dim_a, op.dim_b)
    return ChoiMap(op)
