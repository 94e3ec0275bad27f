"""One- and n-copy distillability tests built on the rank-2 search."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BadDimension, DimensionMismatch, NotProjector, WrongRank, ZeroProbability
from .maps import (
    NAMED_MAPS,
    LinearMapRep,
    Witness,
    adjoint,
    apply_extended,
    closed_form_witness,
    is_k_positive,
    named_map,
    s_map_from_state,
    two_decomposable_from_vectors,
    witness_from_vector,
)
from .operators import (
    BipartiteOperator,
    PureVector,
    herm_eig,
    partial_transpose,
    permute_to_bipartite,
    permute_to_pairs,
    schmidt_rank,
    vector_to_bipartite,
)
from .search import SearchParams, Verdict, rank_constrained_min
from .states import (
    DensityMatrix,
    flip_operator,
    make_rng,
    max_entangled,
    random_density,
    sym_antisym,
    tensor_power,
)

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class PrepassResult:
    """Named-map screen on one side of a state.

    ``map_min_eig`` is the lowest eigenvalue of ``(1 (x) L)(rho)`` (side
    "right") or ``(L (x) 1)(rho)`` (side "left"). ``witness_value`` is
    ``Tr(D rho)`` and only set for square states on the right side.
    """

    tag: str
    side: str
    map_min_eig: float
    witness_value: float | None = None
    certificate: PureVector | None = None
    certificate_value: float | None = None

    @property
    def violation(self) -> bool:
        return self.map_min_eig < 0

    def to_dict(self) -> dict:
        return {
            "map": self.tag,
            "side": self.side,
            "map_min_eig": self.map_min_eig,
            "witness_value": self.witness_value,
            "certificate_value": self.certificate_value,
        }


def rank2_vector_from_map_violation(m: LinearMapRep, rho: BipartiteOperator, phi, side: str = "right"):
    """Turn a negative direction of ``(1 (x) m)(rho)`` into a Schmidt rank-2 witness vector.

    ``m`` must carry ``pre_transpose``. Writing the map as
    ``sum_i V_i X^T V_i^dagger``, the expectation splits into terms
    ``<phi_i|rho^{T_B}|phi_i>`` with ``phi_i = (1 (x) V_i^dagger) phi``
    (conjugated for the left side), and at least one term is negative
    whenever the sum is. Returns the normalized best ``phi_i`` and its value
    on ``rho^{T_B}``.
    """
    if not m.pre_transpose:
        raise ValueError("only maps of the form CP o T have a witness-vector reading")
    phi = np.asarray(getattr(phi, "amplitudes", phi))
    da, db = rho.dims
    pt = partial_transpose(rho, "B").matrix
    best = None
    for k in m.kraus:
        if side == "right":
            cand = np.kron(np.eye(da), k.conj().T) @ phi
        else:
            cand = (np.kron(k.conj().T, np.eye(db)) @ phi).conj()
        norm = np.linalg.norm(cand)
        if norm < 1e-14:
            continue
        cand = cand / norm
        val = float(np.vdot(cand, pt @ cand).real)
        if best is None or val < best[1]:
            best = (cand, val)
    if best is None:
        raise ZeroProbability("all Kraus operators annihilate the vector")
    return PureVector(best[0], da, db), best[1]


def named_map_prepass(rho: BipartiteOperator, tags=NAMED_MAPS) -> list[PrepassResult]:
    """Evaluate the named maps on both factors of ``rho``.

    A negative ``map_min_eig`` for Lambda1..Lambda4 certifies
    one-distillability and comes with a rank-2 vector; Lambda5 is reported
    without a vector certificate.
    """
    da, db = rho.dims
    out = []
    for tag in tags:
        for side, d in (("right", db), ("left", da)):
            if d < 2:
                continue
            m, w = named_map(tag, d)
            ext = apply_extended(m, rho, side)
            vals, vecs = herm_eig(ext)
            wval = None
            if side == "right" and da == db:
                wval = w.value(rho)
            cert = cval = None
            if vals[0] < 0 and m.is_two_decomposable():
                cert, cval = rank2_vector_from_map_violation(m, rho, vecs[:, 0], side)
            out.append(PrepassResult(tag, side, float(vals[0]), wval, cert, cval))
    return out


def one_distillable(rho: BipartiteOperator, params: SearchParams | None = None, prepass: bool = True) -> Verdict:
    """Search for a Schmidt rank-2 psi with ``<psi|rho^{T_B}|psi> < 0``.

    With ``prepass`` the named maps are evaluated first and every rank-2
    vector they produce is used as an extra start for the search.
    """
    return _one_copy(rho, params or SearchParams(), prepass)[0]


def _one_copy(rho, p, prepass):
    warm, screen = [], []
    if prepass:
        screen = named_map_prepass(rho)
        warm = [r.certificate for r in screen if r.certificate is not None]
    pt = partial_transpose(rho, "B")
    v = rank_constrained_min(pt, 2, p, initial_vectors=warm)
    if screen:
        v = replace(v, extras={"prepass": [r.to_dict() for r in screen]})
    return v, warm


def lift_certificate(psi: PureVector, rho: BipartiteOperator, n: int) -> PureVector:
    """Extend a one-copy certificate to n copies.

    The extra pairs get the product basis vector ``|ij>`` with the largest
    diagonal entry of ``rho``; it is positive on ``rho^{T_B}``, so the sign
    of the value is preserved and the Schmidt rank stays the same.
    """
    if n == 1:
        return psi
    da, db = rho.dims
    idx = int(np.argmax(np.diag(rho.matrix).real))
    prod = np.zeros(da * db, dtype=complex)
    prod[idx] = 1.0
    v = psi.amplitudes
    for _ in range(n - 1):
        v = np.kron(v, prod)
    return vector_to_bipartite(v, da, db, n)


def tensor_power_pt_residual(rho: BipartiteOperator, n: int) -> float:
    """``max|(rho^{(x)n})^{T_B} - (rho^{T_B})^{(x)n}|`` after regrouping."""
    lhs = partial_transpose(tensor_power(rho, n), "B").matrix
    pt = partial_transpose(rho, "B").matrix
    m = pt
    for _ in range(n - 1):
        m = np.kron(m, pt)
    rhs = permute_to_bipartite(m, rho.dim_a, rho.dim_b, n).matrix
    return float(np.max(np.abs(lhs - rhs)))


def n_distillable(rho: BipartiteOperator, n: int, params: SearchParams | None = None, prepass: bool = True) -> Verdict:
    """Rank-2 search on ``rho^{(x)n}`` regrouped as ``A^n | B^n``.

    For ``n > 1`` the one-copy search runs first; its certificate (and any
    pre-pass vectors) are lifted to n copies and used as warm starts, so a
    one-distillable state is always reported n-distillable.
    """
    p = params or SearchParams()
    if n == 1:
        return one_distillable(rho, p, prepass)
    big = tensor_power(rho, n)
    res = tensor_power_pt_residual(rho, n)
    if res > 1e-12:
        raise AssertionError(f"partial transpose does not commute with the tensor power (residual {res:.2e})")
    one, screen_vectors = _one_copy(rho, p, prepass)
    starts = screen_vectors + ([one.certificate] if one.certificate is not None else [])
    warm = [lift_certificate(psi, rho, n) for psi in starts]
    v = rank_constrained_min(partial_transpose(big, "B"), 2, p, initial_vectors=warm)
    return replace(v, copies=n, extras={**one.extras, "one_copy": {"kind": one.kind.value, "value": one.value}})


def _rank2_isometry(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if np.max(np.abs(p @ p - p)) > 1e-9 or np.max(np.abs(p - p.conj().T)) > 1e-9:
        raise NotProjector(f"{name} is not an orthogonal projector")
    w, v = np.linalg.eigh(p)
    rank = int(np.count_nonzero(w > 0.5))
    if rank != 2:
        raise WrongRank(f"{name} has rank {rank}, expected 2")
    return v[:, w > 0.5]


def projector_test(rho: BipartiteOperator, p, q) -> float:
    """Lowest eigenvalue of ``((P (x) Q) rho (P (x) Q))^{T_B}`` on the 2x2 range.

    The compressed state is left unnormalized (trace ``Tr[(P (x) Q) rho]``),
    so the value is the minimum of ``<psi|rho^{T_B}|psi>`` over unit psi in
    the range and is directly comparable to the rank-2 search value.
    """
    wp = _rank2_isometry(p, "P")
    wq = _rank2_isometry(q, "Q")
    if wp.shape[0] != rho.dim_a or wq.shape[0] != rho.dim_b:
        raise DimensionMismatch("projector dimensions do not match the state")
    k = np.kron(wp, wq)
    small = BipartiteOperator(k.conj().T @ rho.matrix @ k, 2, 2)
    return float(herm_eig(partial_transpose(small, "B"))[0][0])


def two_positivity_crosscheck(rho: BipartiteOperator, params: SearchParams | None = None) -> dict:
    """Compare the rank-2 search on ``rho^{T_B}`` with 2-positivity of ``T o S``.

    The Jamiolkowski operator of ``T o S`` is ``d rho^{T_B}``, so the second
    route runs with ``neg_tol`` scaled by d and its value should be d times
    the first.
    """
    p = params or SearchParams()
    d = rho.dim_a
    _, ts = s_map_from_state(rho)
    direct = one_distillable(rho, p, prepass=False)
    via_map = is_k_positive(ts, 2, p.replace(neg_tol=d * p.neg_tol))
    ratio = via_map.value / direct.value if direct.value != 0 else float("nan")
    return {
        "d": d,
        "one_distillable": direct,
        "two_positivity": via_map,
        "kinds_agree": direct.kind == via_map.kind,
        "value_gap": abs(via_map.value - d * direct.value),
        "ratio": ratio,
    }


def filter_state(rho: BipartiteOperator, a) -> DensityMatrix:
    """``(A (x) 1) rho (A^dagger (x) 1) / p`` with ``p`` the success probability."""
    a = np.asarray(a)
    if a.shape != (rho.dim_a, rho.dim_a):
        raise DimensionMismatch(f"filter must be {rho.dim_a}x{rho.dim_a}, got {a.shape}")
    g = np.kron(a, np.eye(rho.dim_b))
    out = g @ rho.matrix @ g.conj().T
    prob = float(np.trace(out).real)
    if prob <= 1e-12:
        raise ZeroProbability(f"filter succeeds with probability {prob:.3e}")
    out = out / prob
    return DensityMatrix((out + out.conj().T) / 2, rho.dim_a, rho.dim_b)


def witness_class_value(w: Witness | BipartiteOperator, a, rho: BipartiteOperator) -> float:
    """``Tr[(A (x) 1) D (A^dagger (x) 1) rho]``."""
    d = w.op if isinstance(w, Witness) else w
    a = np.asarray(a)
    if d.dims != rho.dims or a.shape != (d.dim_a, d.dim_a):
        raise DimensionMismatch("witness, filter and state dimensions do not match")
    g = np.kron(a, np.eye(d.dim_b))
    return float(np.trace(g @ d.matrix @ g.conj().T @ rho.matrix).real)


def map_violation_from_certificate(rho: BipartiteOperator, psi: PureVector) -> dict:
    """Witness-to-map direction for a one-copy certificate.

    With ``L`` the two-decomposable map of ``psi``,
    ``Tr(D rho) = d Tr[(1 (x) L^dagger)(rho) P_+]``; a negative witness value
    therefore forces a negative eigenvalue of ``(1 (x) L^dagger)(rho)``.
    """
    d = rho.dim_a
    w = witness_from_vector(psi)
    lam = two_decomposable_from_vectors([psi])
    ext = apply_extended(adjoint(lam), rho, "right")
    vals, vecs = herm_eig(ext)
    p_side = d * float(np.trace(ext.matrix @ max_entangled(d).matrix).real)
    return {
        "witness_value": w.value(rho),
        "p_plus_value": p_side,
        "identity_residual": abs(w.value(rho) - p_side),
        "map_min_eig": float(vals[0]),
        "map": adjoint(lam),
        "eigvec": vecs[:, 0],
    }


def reduction_two_copy_identity(rho1: BipartiteOperator, rho2: BipartiteOperator) -> dict:
    """Check the two-pair expansion of the reduction map.

    ``(1 (x) L1)(rho1 (x) rho2)`` (L1 acting on B1B2 jointly) against
    ``rho1_A (x) 1 (x) (1 (x) L1)(rho2) + (1 (x) L1)(rho1) (x) rho2``, both
    in pair order. With L1 on the B side, ``(1 (x) L1)(rho) = rho_A (x) 1 - rho``,
    so the spectator factor of the first pair is ``rho1_A (x) 1``. Also checks that negative directions psi_i of the single
    pairs combine into a negative direction of the two-pair operator.
    """
    if rho1.dims != rho2.dims or rho1.dim_a != rho1.dim_b:
        raise DimensionMismatch("need two square states of equal dimension")
    d = rho1.dim_a
    l1, _ = named_map("Lambda1", d)
    l1_big, _ = named_map("Lambda1", d * d)
    joint = permute_to_bipartite(np.kron(rho1.matrix, rho2.matrix), d, d, 2)
    lhs = permute_to_pairs(apply_extended(l1_big, joint, "right"), d, d, 2)

    def spectator(r):
        return np.kron(np.einsum("ijkj->ik", r.matrix.reshape(d, d, d, d)), np.eye(d))

    x1 = apply_extended(l1, rho1, "right").matrix
    x2 = apply_extended(l1, rho2, "right").matrix
    rhs = np.kron(spectator(rho1), x2) + np.kron(x1, rho2.matrix)
    report = {"residual": float(np.max(np.abs(lhs - rhs))), "lhs": lhs}

    e1, v1 = herm_eig(x1)
    e2, v2 = herm_eig(x2)
    if e1[0] < 0 and e2[0] < 0:
        big = np.kron(v1[:, 0], v2[:, 0])
        report["product_value"] = float(np.vdot(big, lhs @ big).real)
    else:
        report["product_value"] = None
    report["single_min_eigs"] = (float(e1[0]), float(e2[0]))
    return report


def two_copy_witness_separability_check(d: int, samples: int = 50, seed: int = 0) -> dict:
    """Reduction witness on two pairs and its pair-separable decomposition.

    Verifies in integers that ``2 (1 - V (x) V) = (1+V)(x)(1-V) + (1-V)(x)(1+V)``,
    that ``1 - V`` on ``d^2 x d^2`` regroups to ``1 - V (x) V`` in pair order,
    and that pair-product witnesses factorize on two copies of sampled states.
    """
    if d < 2:
        raise BadDimension(f"d must be >= 2, got {d}")
    v = np.rint(flip_operator(d).matrix.real).astype(np.int64)
    one = np.eye(d * d, dtype=np.int64)
    lhs = 2 * (np.kron(one, one) - np.kron(v, v))
    rhs = np.kron(one + v, one - v) + np.kron(one - v, one + v)
    exact = bool(np.array_equal(lhs, rhs))

    big_flip = flip_operator(d * d)
    regrouped = permute_to_pairs(big_flip, d, d, 2)
    flip_ok = bool(np.array_equal(np.rint(regrouped.real).astype(np.int64), np.kron(v, v)))

    ps, pa = sym_antisym(d)
    decomp = np.kron(ps.matrix, pa.matrix) + np.kron(pa.matrix, ps.matrix)
    min_eig_decomp = float(herm_eig(decomp)[0][0])

    rng = make_rng(seed)
    worst_residual, min_product = 0.0, np.inf
    for s in range(samples):
        rho = random_density(d, d, seed=rng.integers(2**32))
        psi1 = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
        psi2 = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
        psi1 /= np.linalg.norm(psi1)
        psi2 /= np.linalg.norm(psi2)
        dtb = np.kron(np.outer(psi1, psi1.conj()), np.outer(psi2, psi2.conj()))
        pt = partial_transpose(rho, "B").matrix
        two = np.kron(pt, pt)
        direct = float(np.trace(dtb @ two).real)
        factors = (np.vdot(psi1, pt @ psi1).real, np.vdot(psi2, pt @ psi2).real)
        worst_residual = max(worst_residual, abs(direct - factors[0] * factors[1]))
        # on rho itself both factors are expectation values of a state
        f_rho = (np.vdot(psi1, rho.matrix @ psi1).real, np.vdot(psi2, rho.matrix @ psi2).real)
        min_product = min(min_product, min(f_rho))
    return {
        "decomposition_exact": exact,
        "flip_regroups_to_pair_product": flip_ok,
        "decomposition_min_eig": min_eig_decomp,
        "factorization_residual": worst_residual,
        "min_factor_on_states": float(min_product),
    }


def reduction_witness_value(rho: BipartiteOperator) -> float:
    """``Tr[(1 - d P_+) rho]`` for a square state."""
    if rho.dim_a != rho.dim_b:
        raise DimensionMismatch("reduction witness needs a square state")
    return float(np.trace(closed_form_witness("Lambda1", rho.dim_a).matrix @ rho.matrix).real)


def certificate_is_sound(v: Verdict, m: BipartiteOperator) -> bool:
    """Independent check of a violation certificate against ``m``."""
    if not v.violation:
        return False
    return v.check_certificate(m) <= IDENTITY_TOL and schmidt_rank(v.certificate) <= v.k and v.value < -v.params.neg_tol
