"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import csv
import io
import json
import time

import numpy as np
import pytest

from qdistill.cli import main
from qdistill.distill import (
    map_violation_from_certificate,
    named_map_prepass,
    one_distillable,
    rank2_vector_from_map_violation,
    reduction_two_copy_identity,
    two_positivity_crosscheck,
    two_copy_witness_separability_check,
)
from qdistill.maps import (
    LinearMapRep,
    closed_form_witness,
    jamiolkowski_operator,
    map_from_operator,
    named_witness_vectors,
    s_map_from_state,
)
from qdistill.operators import partial_transpose, schmidt_rank
from qdistill.search import SearchParams, VerdictKind
from qdistill.states import isotropic, make_rng, min_pt_eigenvalue, random_density, sym_antisym, werner

from conftest import random_matrix, random_ppt_state, record_criterion

pytestmark = pytest.mark.acceptance


def gate(number, name, ok, detail=""):
    record_criterion(number, name, ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} {detail}")
    assert ok, detail


def _int_pt(m, d):
    return m.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)


def _int_forms(d):
    """Integer oracles: flip V, diagonal projector Z, and d P+ built from index rules."""
    n = d * d
    v, z, dp = (np.zeros((n, n), dtype=np.int64) for _ in range(3))
    for i in range(d):
        for j in range(d):
            v[i * d + j, j * d + i] = 1
            dp[i * d + i, j * d + j] = 1
        z[i * d + i, i * d + i] = 1
    return np.eye(n, dtype=np.int64), v, z, dp


def test_criterion_1_named_witness_exactness():
    start = time.perf_counter()
    ok = True
    for d in (2, 3, 4):
        one, v, z, dp = _int_forms(d)
        expected = {
            "Lambda1": one - v,
            "Lambda2": one + v - 2 * z,
            "Lambda3": dp + (d - 2) * z,
            "Lambda4": -dp + d * z,
        }
        for tag, target in expected.items():
            vecs = named_witness_vectors(tag, d)
            assert all(v_.dtype.kind == "i" for v_ in vecs)
            total = sum(np.outer(x, x) for x in vecs)
            ok &= np.array_equal(total, target)
            # the witness is the partial transpose of the same integer sum
            ok &= np.array_equal(closed_form_witness(tag, d).matrix, _int_pt(total, d))
    elapsed = time.perf_counter() - start
    gate(1, "named-witness exactness", bool(ok) and elapsed < 1, f"d=2,3,4 time={elapsed:.3f}s")


def _random_kraus_map(rng, d):
    count = int(rng.integers(1, d * d + 1))
    ops = tuple(random_matrix(rng, d) for _ in range(count))
    return LinearMapRep(ops, pre_transpose=bool(rng.integers(2)))


def test_criterion_2_jamiolkowski_round_trip():
    rng = make_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for d in (2, 3):
        units = [np.eye(d)[:, [i]] @ np.eye(d)[[j], :] for i in range(d) for j in range(d)]
        for _ in range(25):
            m = _random_kraus_map(rng, d)
            back = map_from_operator(jamiolkowski_operator(m))
            for e in units:
                worst = max(worst, np.max(np.abs(back(e) - m(e))))
    elapsed = time.perf_counter() - start
    gate(2, "Jamiolkowski round-trip", worst < 1e-10 and elapsed < 5, f"max_err={worst:.2e} time={elapsed:.2f}s")


def test_criterion_3_reduction_detection():
    start = time.perf_counter()
    params = SearchParams(restarts=64)
    ok, worst = True, 0.0
    for f in np.linspace(0, 1, 21):
        rho = isotropic(3, f)
        screen = named_map_prepass(rho, ("Lambda1",))
        red = next(r for r in screen if r.side == "right")
        worst = max(worst, abs(red.witness_value - (1 - 3 * f)))
        v = one_distillable(rho, params)
        if f > 1 / 3:
            ok &= red.violation and v.kind is VerdictKind.VIOLATION
            ok &= v.certificate is not None and schmidt_rank(v.certificate) <= 2
            pt = partial_transpose(rho, "B")
            amp = v.certificate.amplitudes
            ok &= v.check_certificate(pt) < 1e-12 and np.vdot(amp, pt.matrix @ amp).real < 0
        else:
            ok &= not red.violation and v.kind is VerdictKind.NO_VIOLATION
    elapsed = time.perf_counter() - start
    ok &= worst < 1e-12 and elapsed < 30
    gate(3, "reduction-criterion detection", bool(ok), f"witness_err={worst:.1e} time={elapsed:.2f}s")


def test_criterion_4_dimension_forced_completeness():
    start = time.perf_counter()
    params = SearchParams(restarts=64)
    worst = 0.0
    for i in range(100):
        db = 2 if i < 50 else 3
        rho = random_density(2, db, rank=1 + i % (2 * db), seed=400 + i)
        v = one_distillable(rho, params)
        worst = max(worst, abs(v.value - min_pt_eigenvalue(rho)))
    elapsed = time.perf_counter() - start
    gate(4, "dimension-forced completeness", worst < 1e-8 and elapsed < 30, f"max_gap={worst:.1e} time={elapsed:.2f}s")


def test_criterion_5_certificate_map_mechanics():
    params = SearchParams(restarts=64)
    rng = make_rng(5)
    found, tried = 0, 0
    identity_worst = split_worst = 0.0
    ok = True
    while found < 50 and tried < 500:
        tried += 1
        rho = random_density(3, 3, rank=int(rng.integers(1, 5)), seed=rng.integers(2**32))
        if min_pt_eigenvalue(rho) >= 0:
            continue
        v = one_distillable(rho, params, prepass=False)
        if not v.violation:
            continue
        found += 1
        res = map_violation_from_certificate(rho, v.certificate)
        identity_worst = max(identity_worst, res["identity_residual"])
        ok &= res["map_min_eig"] < -1e-9
        # reverse: the negative eigenvector splits into rank-2 terms on rho^{T_B}
        m, phi = res["map"], res["eigvec"]
        pt = partial_transpose(rho, "B").matrix
        terms = [np.kron(np.eye(3), k.conj().T) @ phi for k in m.kraus]
        split = sum(np.vdot(t, pt @ t).real for t in terms)
        split_worst = max(split_worst, abs(split - res["map_min_eig"]))
        psi, val = rank2_vector_from_map_violation(m, rho, phi, "right")
        ok &= schmidt_rank(psi) <= 2 and val < 0
        ok &= abs(np.vdot(psi.amplitudes, pt @ psi.amplitudes).real - val) < 1e-9
    ok &= found == 50 and identity_worst < 1e-9 and split_worst < 1e-9
    gate(5, "certificate and map mechanics", bool(ok), f"instances={found}/{tried} map_identity={identity_worst:.1e} split={split_worst:.1e}")


def test_criterion_6_two_positivity_equivalence():
    ok = True
    choi_worst = 0.0
    for i in range(5):
        rho = random_density(3, 3, seed=600 + i)
        _, ts = s_map_from_state(rho)
        target = 3 * partial_transpose(rho, "B").matrix
        choi_worst = max(choi_worst, np.max(np.abs(jamiolkowski_operator(ts).matrix - target)))
    ok &= choi_worst < 1e-10
    params = SearchParams(restarts=64)
    gap = 0.0
    for i in range(40):
        d = 2 if i < 20 else 3
        rho = random_density(d, d, rank=1 + i % (d * d), seed=650 + i)
        res = two_positivity_crosscheck(rho, params)
        ok &= res["kinds_agree"]
        gap = max(gap, res["value_gap"])
    ok &= gap < 1e-8
    gate(6, "2-positivity of T o S equivalence", bool(ok), f"choi_err={choi_worst:.1e} max_gap={gap:.1e}")


def test_criterion_7_ppt_soundness():
    rng = make_rng(7)
    params = SearchParams(restarts=64)
    start = time.perf_counter()
    dims = [(2, 2)] * 20 + [(2, 3)] * 20 + [(3, 3)] * 60
    flagged, lowest = 0, np.inf
    for da, db in dims:
        rho = random_ppt_state(da, db, rng)
        v = one_distillable(rho, params)
        flagged += v.violation
        lowest = min(lowest, v.value)
    elapsed = time.perf_counter() - start
    gate(7, "PPT soundness", flagged == 0 and elapsed < 60, f"violations={flagged} min_value={lowest:.2e} time={elapsed:.2f}s")


def test_criterion_8_two_copy_identities():
    rng = make_rng(8)
    worst = 0.0
    for i in range(20):
        d = 2 + i % 2
        r1 = random_density(d, d, seed=rng.integers(2**32))
        r2 = random_density(d, d, seed=rng.integers(2**32))
        worst = max(worst, reduction_two_copy_identity(r1, r2)["residual"])
    exact = True
    for d in (2, 3):
        one, v, _, _ = _int_forms(d)
        two_ps, two_pa = one + v, one - v
        ps, pa = sym_antisym(d)
        exact &= np.array_equal(2 * ps.matrix, two_ps) and np.array_equal(2 * pa.matrix, two_pa)
        lhs = np.kron(one, one) - np.kron(v, v)
        # with projectors P_S, P_A the sum P_S (x) P_A + P_A (x) P_S is half of lhs
        exact &= np.array_equal(2 * lhs, np.kron(two_ps, two_pa) + np.kron(two_pa, two_ps))
        exact &= not np.array_equal(4 * lhs, np.kron(two_ps, two_pa) + np.kron(two_pa, two_ps))
        exact &= two_copy_witness_separability_check(d, samples=5)["decomposition_exact"]
    gate(8, "two-copy identities", worst < 1e-10 and bool(exact), f"expansion_residual={worst:.1e} decomposition_exact={bool(exact)}")


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_criterion_9_werner_boundary(capsys):
    steps = 41
    _, out = _cli(capsys, "sweep", "werner", "--d", 2, "--start", -1, "--stop", 0, "--steps", steps, "--restarts", 32)
    rows = list(csv.DictReader(io.StringIO(out)))
    alphas = np.array([float(r["param"]) for r in rows])
    flags = np.array([r["verdict"] == "ViolationFound" for r in rows])
    step = alphas[1] - alphas[0]
    ok = flags[0] and not flags[-1]
    flip = np.flatnonzero(flags[:-1] != flags[1:])
    ok &= len(flip) == 1
    # oracle boundary from the partial-transpose spectrum: min eig (1 + 2 alpha)/(4 + 2 alpha)
    oracle = [(1 + 2 * a) / (4 + 2 * a) < -1e-9 for a in alphas]
    ok &= list(flags) == oracle
    where = alphas[flip[0]] if len(flip) else np.nan
    ok &= abs(where + 0.5) <= step + 1e-12

    base, doubled = SearchParams(restarts=32), SearchParams(restarts=64)
    stable, lowest = True, np.inf
    for a in np.linspace(-0.5, 1, 16):
        rho = werner(3, a)
        v1 = one_distillable(rho, base)
        if v1.violation:
            continue
        v2 = one_distillable(rho, doubled)
        lowest = min(lowest, v1.value)
        stable &= v2.kind is VerdictKind.NO_VIOLATION and abs(v1.value - v2.value) <= 1e-8
    ok &= lowest >= -1e-9 and stable
    gate(9, "Werner boundary", bool(ok), f"d2_flip_at={where:.3f} step={step:.3f} d3_min={lowest:.2e} stable={bool(stable)}")


def _numerics(x, prefix=""):
    if isinstance(x, dict):
        for k, v in x.items():
            if k != "timing":
                yield from _numerics(v, f"{prefix}.{k}")
    elif isinstance(x, list):
        for i, v in enumerate(x):
            yield from _numerics(v, f"{prefix}[{i}]")
    elif isinstance(x, (int, float)) and not isinstance(x, bool):
        yield prefix, float(x)
    else:
        yield prefix, x


def _same(a, b):
    pa, pb = list(_numerics(a)), list(_numerics(b))
    if [k for k, _ in pa] != [k for k, _ in pb]:
        return False
    for (_, x), (_, y) in zip(pa, pb):
        if isinstance(x, float) and isinstance(y, float):
            if abs(x - y) > 1e-12:
                return False
        elif x != y:
            return False
    return True


def test_criterion_10_determinism(tmp_path, capsys):
    state = tmp_path / "r.qstate.json"
    commands = [
        ("gen", "random", "--d", 3, "--rank", 3, "--seed", 17),
        ("distill", state, "--seed", 3, "--restarts", 32),
        ("distill", state, "--seed", 3, "--restarts", 8, "--copies", 2),
        ("kpos", "--from-state", state, "--k", 2, "--seed", 3, "--restarts", 16),
        ("kpos", "--map", "lambda2", "--d", 3, "--k", 1, "--seed", 3),
        ("check", state),
    ]
    _cli(capsys, *commands[0], "--out", state)
    ok = True
    for cmd in commands:
        _, first = _cli(capsys, *cmd)
        _, second = _cli(capsys, *cmd)
        ok &= _same(json.loads(first), json.loads(second))
    _, s1 = _cli(capsys, "sweep", "isotropic", "--d", 3, "--start", 0, "--stop", 1, "--steps", 5, "--seed", 3, "--restarts", 16)
    _, s2 = _cli(capsys, "sweep", "isotropic", "--d", 3, "--start", 0, "--stop", 1, "--steps", 5, "--seed", 3, "--restarts", 16)
    r1, r2 = list(csv.reader(io.StringIO(s1))), list(csv.reader(io.StringIO(s2)))
    ok &= r1[0] == r2[0] and len(r1) == len(r2)
    for a, b in zip(r1[1:], r2[1:]):
        ok &= all(abs(float(x) - float(y)) <= 1e-12 for x, y in zip(a[:4], b[:4])) and a[4] == b[4]
    gate(10, "determinism", bool(ok), f"commands={len(commands) + 1}")
