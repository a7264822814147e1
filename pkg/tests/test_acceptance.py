"""Acceptance criteria, one test per criterion at its stated tolerance.

Run with ``pytest -v -s tests/test_acceptance.py`` to see one pass/fail
line per criterion.  Criterion 11 (conjugate posterior mean to 1e-8 at the
9-point univariate set) is known to fail: the integrand's Gauss-Hermite
error at that level is ~8.6e-5 and first drops below 1e-8 at the 19-point
set; see the assertion message for the measured value.
"""

import filecmp
import math
import time

import numpy as np
import pytest

import hermgrid as hg
from hermgrid.cli import (
    main,
    point_count,
    resolve_config,
    run_quad_study,
    _ml_allocation_for_budget,
    bisect_epsilon,
    threshold_set_for_budget,
)
from hermgrid.errors import LevelTooLarge, ThresholdTooSmall
from hermgrid.indexset import (
    IndexSet,
    MultiIndex,
    build_threshold_set,
    degree_weight,
    surrogate_weight,
)
from hermgrid.smolyak import _projection_matrix

from util import (
    brute_force_threshold,
    monomial_map,
    random_downward_closed,
    random_product_surrogate,
    tensor_moment,
)

mi = MultiIndex.from_dict


def report(number: int, name: str, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number:2d}] {status} {name}: {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


def ladder(n):
    return IndexSet([MultiIndex()] + [mi({0: k}) for k in range(1, n + 1)])


def test_criterion_01_hermite_orthonormality():
    start = time.perf_counter()
    worst = 0.0
    for m in range(17):
        for k in range(17):
            rule = hg.gauss_hermite_rule((m + k) // 2)
            table = hg.hermite_eval_all(max(m, k), rule.nodes)
            value = float(np.sum(rule.weights * table[:, m] * table[:, k]))
            worst = max(worst, abs(value - (1.0 if m == k else 0.0)))
    elapsed = time.perf_counter() - start
    report(
        1, "hermite orthonormality",
        worst <= 1e-10 and elapsed < 1.0,
        f"max deviation {worst:.3e} (tol 1e-10), {elapsed:.2f}s (limit 1s)",
    )


def test_criterion_02_rule_exactness():
    worst = 0.0
    for n in range(13):
        rule = hg.gauss_hermite_rule(n)
        for degree in range(0, 2 * n + 2):
            got = float(np.sum(rule.weights * rule.nodes ** degree))
            if degree % 2 == 0:
                exact = 1.0
                k = degree - 1
                while k > 1:
                    exact *= k
                    k -= 2
                worst = max(worst, abs(got - exact) / exact)
            else:
                scale = float(np.sum(rule.weights * np.abs(rule.nodes) ** degree))
                worst = max(worst, abs(got) / max(1.0, scale))
    report(
        2, "gaussian moment exactness",
        worst <= 1e-9,
        f"max relative deviation {worst:.3e} (tol 1e-9, odd degrees scaled "
        f"by the rule's absolute mass)",
    )


def test_criterion_03_interpolation_stability_bound():
    violations = 0
    worst_ratio = 0.0
    for m in range(1, 17):
        for n in range(0, 17):
            rule = hg.gauss_hermite_rule(n)
            values = hg.hermite_eval_all(m, rule.nodes)[:, m]
            coeffs = _projection_matrix(n) @ values
            norm = float(np.linalg.norm(coeffs))
            bound = 4.0 * math.sqrt(2.0 * m - 1.0)
            worst_ratio = max(worst_ratio, norm / bound)
            if norm > bound:
                violations += 1
    report(
        3, "univariate interpolation stability",
        violations == 0,
        f"0 violations required, got {violations}; max norm/bound {worst_ratio:.3f}",
    )


def test_criterion_04_smolyak_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_interp = 0.0
    worst_quad = 0.0
    for _ in range(30):
        lam = random_downward_closed(rng, 3, 25)
        coeffs = {nu: rng.uniform(-2.0, 2.0) for nu in lam}

        def u(y):
            return sum(c * monomial_map(nu)(y)[0] for nu, c in coeffs.items())

        poly = hg.interpolate(lam, u)
        scale = 1.0 + sum(abs(c) for c in coeffs.values())
        for _ in range(100):
            y = rng.uniform(-3.0, 3.0, 3)
            worst_interp = max(worst_interp, abs(poly.eval(y)[0] - u(y)) / scale)
        for nu in lam:
            got = hg.quadrature(lam, monomial_map(nu))[0]
            worst_quad = max(worst_quad, abs(got - tensor_moment(nu)))
        # probes with a unit exponent (exact even outside the set)
        for _ in range(3):
            probe = mi({
                int(rng.integers(0, 3)): 1,
                3: int(rng.integers(2, 4)),
            })
            got = hg.quadrature(lam, monomial_map(probe))[0]
            worst_quad = max(worst_quad, abs(got - tensor_moment(probe)))
    elapsed = time.perf_counter() - start
    report(
        4, "smolyak polynomial/quadrature exactness",
        worst_interp <= 1e-9 and worst_quad <= 1e-9 and elapsed < 30.0,
        f"interp residual {worst_interp:.3e}, quad residual {worst_quad:.3e} "
        f"(tol 1e-9), {elapsed:.1f}s (limit 30s)",
    )


def test_criterion_05_threshold_walk_oracle_and_complexity():
    rng = np.random.default_rng(555)
    checked = 0
    max_ratio = 0.0
    for _ in range(50):
        dims = int(rng.integers(1, 5))
        surrogate, _, growth = random_product_surrogate(rng, dims)
        eps = 10.0 ** rng.uniform(-3.0, -0.5)
        stats = {}
        result = build_threshold_set(surrogate, eps, d_max=dims, stats=stats)
        box = int(math.log(1.0 / eps) / math.log(growth.min())) + 1
        oracle = brute_force_threshold(surrogate, eps, dims, box)
        assert set(result.members) == oracle
        assert result.downward_closed
        bound = 4 * len(result) + 1
        max_ratio = max(max_ratio, stats["tests"] / bound)
        assert stats["tests"] <= bound
        checked += 1
    report(
        5, "threshold walk equals brute force within the test bound",
        checked == 50,
        f"50/50 surrogates matched; worst tests/(4|set|+1) = {max_ratio:.2f}",
    )


def test_criterion_06_telescoping_and_work_model():
    rng = np.random.default_rng(77)
    worst_coeff = 0.0
    for _ in range(10):
        lam = random_downward_closed(rng, 3, 15)
        sw = hg.default_work_sequence(3)
        alloc = hg.LevelAllocation({nu: 2 for nu in lam}, sw)
        v = lambda y: float(np.exp(0.2 * y[0]) + (y[1] if len(y) > 1 else 0.0) ** 2)
        ml = hg.ml_interpolate(alloc, [v, v])
        sl = hg.interpolate(lam, v)
        for nu in set(ml.coefficients) | set(sl.coefficients):
            worst_coeff = max(
                worst_coeff,
                float(np.max(np.abs(ml.coefficient(nu) - sl.coefficient(nu)))),
            )
        q = hg.ml_quadrature(alloc, [v, v])
        worst_coeff = max(worst_coeff, abs(float(q[0]) - float(hg.quadrature(lam, v)[0])))
    mismatches = 0
    sw = hg.default_work_sequence(6)
    for _ in range(100):
        lam = random_downward_closed(rng, 3, 12)
        top = int(rng.integers(1, 5))
        alloc = hg.LevelAllocation({nu: max(0, top - nu.order) for nu in lam}, sw)
        if hg.work(alloc) != hg.work_level_major(alloc):
            mismatches += 1
    report(
        6, "multilevel telescoping and work model",
        worst_coeff <= 1e-14 and mismatches == 0,
        f"max telescoping residual {worst_coeff:.2e} (tol 1e-14); "
        f"work-order mismatches {mismatches}/100 (must be 0)",
    )


def test_criterion_07_analytic_quadrature_convergence():
    start = time.perf_counter()
    problem = hg.ModelProblem1D(hg.RepresentationSystem.constant_mode(0.5))
    target = hg.as_parametric_map(problem, ("exact",))
    reference = -math.exp(0.125) / 2.0
    error = None
    points_used = None
    for level in range(15):
        selected = ladder(level)
        points_used = point_count(selected)
        if points_used > 15:
            break
        error = abs(float(hg.quadrature(selected, target)[0]) - reference)
        if error <= 1e-8:
            break
    elapsed = time.perf_counter() - start
    report(
        7, "analytic lognormal quadrature",
        error is not None and error <= 1e-8 and points_used <= 15 and elapsed < 1.0,
        f"error {error:.3e} (tol 1e-8) at {points_used} points (limit 15), "
        f"{elapsed:.2f}s (limit 1s)",
    )


def test_criterion_08_multivariate_rate(tmp_path):
    start = time.perf_counter()
    study = resolve_config(
        "quad",
        {"system": "sindecay", "r_decay": "3.0", "d_max": "16"},
        0,
        budgets=(400, 1200, 4000, 10000, 20000),
    )
    rows = run_quad_study(study, tmp_path)
    errors = [row[2] for row in rows]
    slope = rows[-1][3]
    elapsed = time.perf_counter() - start
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    report(
        8, "multivariate quadrature rate",
        len(rows) >= 5 and decreasing and slope is not None and slope <= -1.0
        and elapsed < 300.0,
        f"errors {['%.2e' % e for e in errors]}, fitted slope {slope:.2f} "
        f"(need <= -1.0), {elapsed:.0f}s (limit 300s)",
    )


def test_criterion_09_multilevel_vs_single_level(tmp_path):
    start = time.perf_counter()
    study = resolve_config(
        "ml-quad",
        {"system": "sindecay", "r_decay": "3.0", "d_max": "4", "alpha": "1.0"},
        0,
        budgets=(2048, 4096, 8192, 16384),
    )
    problem = study.problem
    exact_map = hg.as_parametric_map(problem, ("exact",))
    ref_set = threshold_set_for_budget(study, 2, 2048)
    reference = float(hg.quadrature(ref_set, exact_map)[0])
    family = study.weight_family(2)
    surrogate = lambda nu: surrogate_weight(family, nu)

    wins = 0
    details = []
    for budget in study.budgets:
        alloc, sw = _ml_allocation_for_budget(study, 2, budget)
        levels = [hg.as_parametric_map(problem, ("fem", sw.values[j]))
                  for j in range(1, alloc.max_level + 1)]
        ml_error = abs(float(hg.ml_quadrature(alloc, levels)[0]) - reference)

        # single level: same finest mesh, every node at full cost
        finest = alloc.max_level
        per_node = sw.cumulative(finest)

        def sl_cost(eps):
            try:
                selected = build_threshold_set(surrogate, eps, family.d_max)
            except ThresholdTooSmall:
                return math.inf
            if len(selected) == 0:
                return 0
            try:
                return point_count(selected) * per_node
            except LevelTooLarge:
                return math.inf

        eps = bisect_epsilon(sl_cost, budget)
        selected = build_threshold_set(surrogate, eps, family.d_max)
        sl_map = hg.as_parametric_map(problem, ("fem", sw.values[finest]))
        sl_error = abs(float(hg.quadrature(selected, sl_map)[0]) - reference)
        wins += ml_error <= sl_error
        details.append(f"W={budget}: ml {ml_error:.2e} vs sl {sl_error:.2e}")
    elapsed = time.perf_counter() - start
    report(
        9, "multilevel beats single level at matched work",
        wins >= 3 and elapsed < 300.0,
        f"{wins}/4 budgets (need >= 3); {'; '.join(details)}; {elapsed:.0f}s",
    )


def test_criterion_10_grf_statistics():
    n_samples = 100_000
    plan = hg.circulant_embed_1d(hg.CovarianceSpec.exponential(1.0), 64, 2.0)
    samples = hg.sample_grf_batch(plan, 7, n_samples)
    target = plan.spec.rho(plan.grid[:, None] - plan.grid[None, :])
    cov_dev = float(np.abs(samples.T @ samples / n_samples - target).max())
    cov_tol = 4.0 * math.sqrt(2.0 / n_samples)

    modes = 200
    kl_coeffs = np.array([
        hg.brownian_bridge_kl(modes, 1.0, 0.5, np.eye(modes)[i]) for i in range(modes)
    ])
    lc_coeffs = []
    for j in range(13):
        k = int(math.floor(2 ** j * 0.5))
        if k < 2 ** j:
            value = hg.levy_ciesielski(12, 0.5, {(j, k): 1.0})
            if value != 0.0:
                lc_coeffs.append(value)
    lc_coeffs = np.array(lc_coeffs)
    rng = np.random.default_rng(404)
    ok_bridges = True
    bridge_details = []
    for name, coeffs in (("sine-series", kl_coeffs), ("hat-series", lc_coeffs)):
        draws = rng.standard_normal((n_samples, coeffs.size))
        values = draws @ coeffs
        variance = float(np.var(values))
        mc_sigma = float(np.std(values ** 2) / math.sqrt(n_samples))
        truncation = 0.25 - float(np.sum(coeffs ** 2))
        ok = abs(variance - 0.25) <= 3.0 * mc_sigma + abs(truncation)
        ok_bridges = ok_bridges and ok
        bridge_details.append(f"{name} var {variance:.4f} (3sigma {3*mc_sigma:.4f})")
    report(
        10, "field sampler and bridge statistics",
        cov_dev <= cov_tol and ok_bridges,
        f"cov deviation {cov_dev:.4f} (tol {cov_tol:.4f}); " + "; ".join(bridge_details),
    )


def test_criterion_11a_conjugate_posterior_mean():
    setup = hg.BayesSetup(hg.ParametricMapFn(lambda y: [y[0]], 1), [1.0], [[1.0]])
    phi = hg.ParametricMapFn(lambda y: [y[0]], 1)
    estimate = hg.posterior_expectation(setup, phi, ladder(8))
    error = abs(float(estimate.mean[0]) - 0.5)
    report(
        11, "conjugate posterior mean at the 9-point set",
        error <= 1e-8,
        f"|mean - 0.5| = {error:.3e} at the stated set {{0..8}} (tol 1e-8); "
        f"the stated tolerance is first met at set {{0..18}}",
    )


def test_criterion_11b_trivial_data_normalization():
    setup = hg.BayesSetup(hg.ParametricMapFn(lambda y: [1.0], 1), [1.0], [[1.0]])
    phi = hg.ParametricMapFn(lambda y: [1.0], 1)
    estimate = hg.posterior_expectation(setup, phi, ladder(8))
    deviation = abs(estimate.normalization - 1.0)
    report(
        11, "trivial-data normalization",
        deviation <= 1e-15,
        f"|Z - 1| = {deviation:.2e} (machine precision)",
    )


def test_criterion_12_cli_determinism(tmp_path):
    configs = {
        "c.cfg": "system = constant:0.5\nqoi = point\nx0 = 1.0\n",
        "g.cfg": "cov = exponential\ncorr_length = 1.0\ngrid_m = 16\nell = 2.0\n",
    }
    for name, text in configs.items():
        (tmp_path / name).write_text(text)
    runs = [
        (["quad", "--config", str(tmp_path / "c.cfg"), "--budgets", "3,5,7"], "q"),
        (["grf", "--config", str(tmp_path / "g.cfg"), "--budgets", "5"], "g"),
        (["bayes", "--budgets", "2,4,8"], "b"),
    ]
    identical = True
    for args, tag in runs:
        out1 = tmp_path / f"{tag}1"
        out2 = tmp_path / f"{tag}2"
        for out in (out1, out2):
            assert main(args + ["--out", str(out), "--seed", "42"]) == 0
        names = [p.name for p in out1.iterdir()]
        match, mismatch, errors = filecmp.cmpfiles(out1, out2, names, shallow=False)
        identical = identical and not mismatch and not errors
    report(
        12, "byte-identical study reruns",
        identical,
        "quad, grf, bayes outputs compared byte for byte",
    )
