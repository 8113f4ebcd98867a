"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line once its assertions hold (visible
with ``pytest -s``).  Criteria marked "exact" run on the rational
backend with zero tolerance.
"""

import time
from fractions import Fraction as Fr
from math import comb, inf, sqrt

import numpy as np
import pytest

from wflpath import (F64, RATIONAL, Instance, gen_1fl, gen_random,
                     gen_worst_case, solve_path, verify_path)
from wflpath.oracle import solve_fixed_gamma_dp, solve_fixed_gamma_qp
from wflpath.transform import gamma_for_budget, to_dual, tv_budget_of

FIG1 = Instance.make([0, Fr(-1, 2), Fr(1, 2), Fr(1, 2)],
                     [Fr(1, 50), Fr(1, 2), Fr(1, 2)], RATIONAL)

CASCADE_SIZES = (5, 10, 20, 30, 40)


def x_from_w(w):
    return [w[i + 1] - w[i] for i in range(len(w) - 1)]


@pytest.fixture(scope="module")
def cascade_paths():
    return {n: solve_path(gen_worst_case(n), segments="events")
            for n in CASCADE_SIZES}


def test_c1_benchmark_exact_reproduction():
    t0 = time.time()
    path = solve_path(to_dual(FIG1))
    elapsed = time.time() - t0

    fused = path.fused_intervals(1)
    assert fused == [(Fr(25, 27), Fr(25, 23)), (Fr(25, 4), inf)]
    unfuse = [e for e in path.events if e.kind.value == "unfuse"]
    assert [(e.gamma, e.index) for e in unfuse] == [(Fr(25, 23), 2)]

    # spot-check equality/inequality of the pair on both sides of each edge
    for g in (Fr(25, 27), Fr(1), Fr(25, 23), Fr(25, 4), Fr(100)):
        x = path.solution_at(g)
        assert x[0] == x[1]
    for g in (Fr(1, 2), Fr(25, 27) - Fr(1, 1000), Fr(25, 23) + Fr(1, 1000),
              Fr(25, 4) - Fr(1, 1000)):
        x = path.solution_at(g)
        assert x[0] != x[1]
    assert elapsed < 1.0
    print(f"\nACCEPTANCE C1 benchmark-instance exact path (events, fused "
          f"windows, {elapsed * 1e3:.0f} ms): PASS")


def test_c2_equal_weights_invariant_suite():
    total_fuse = 0
    for n in (10, 100, 1000, 10000):
        for seed in range(100):
            inst = gen_1fl(gen_random(n, seed).y)
            path = solve_path(to_dual(inst), segments="events")
            fuse, unfuse = path.event_counts()
            assert unfuse == 0, (n, seed)
            assert fuse <= n - 1, (n, seed)
            total_fuse += fuse
    print(f"\nACCEPTANCE C2 equal-weight paths never unfuse "
          f"(400 instances, {total_fuse} fuse events): PASS")


def test_c3_adversarial_quadratic_lower_bound(cascade_paths):
    ratios = []
    for n in CASCADE_SIZES:
        fuse, unfuse = cascade_paths[n].event_counts()
        total = fuse + unfuse
        assert total >= n * (n - 1) // 2, (n, total)
        ratios.append(total / n ** 2)
    assert all(Fr(1, 4) <= r <= 1 for r in ratios), ratios
    print(f"\nACCEPTANCE C3 adversarial events >= n(n-1)/2, total/n^2 in "
          f"[1/4, 1] (got {', '.join(f'{r:.2f}' for r in ratios)}): PASS")


def test_c4_fuse_unfuse_gap_linear(cascade_paths):
    gaps = {}
    for n in CASCADE_SIZES:
        fuse, unfuse = cascade_paths[n].event_counts()
        gaps[n] = abs(fuse - unfuse)
    fitted_c = max(gaps[n] / n for n in (5, 10, 20))
    assert fitted_c > 0
    for n in (30, 40):
        assert gaps[n] <= 1.5 * fitted_c * n, (n, gaps[n], fitted_c)
    print(f"\nACCEPTANCE C4 |fuse-unfuse| <= c*n with c={fitted_c:.2f} "
          f"fitted on small n, stable at n=30,40: PASS")


def test_c5_event_count_ceiling(cascade_paths):
    battery = [(FIG1.n, solve_path(to_dual(FIG1), segments="events"))]
    battery += [(n, p) for n, p in cascade_paths.items()]
    battery += [(n, solve_path(gen_worst_case(n, "doubling"), segments="events"))
                for n in (5, 10, 15)]
    for seed in range(30):
        n = 4 + 4 * seed
        battery.append((n, solve_path(to_dual(gen_random(n, seed)),
                                      segments="events")))
    for seed in range(5):
        inst = gen_1fl(gen_random(50, seed).y)
        battery.append((50, solve_path(to_dual(inst), segments="events")))
    for n, path in battery:
        assert len(path.events) <= 8 * comb(n + 1, 2), n
    print(f"\nACCEPTANCE C5 every path ({len(battery)} solved) within the "
          f"8*C(n+1,2) ceiling: PASS")


def _oracle_gap(inst, path, gammas):
    dual = path.dual
    worst_path_dp = worst_path_qp = worst_dp_qp = 0
    for g in gammas:
        mine = path.solution_at(g)
        dp = solve_fixed_gamma_dp(inst, g)
        qp = x_from_w(solve_fixed_gamma_qp(dual, g))
        worst_path_dp = max(worst_path_dp,
                            max(abs(a - b) for a, b in zip(mine, dp)))
        worst_path_qp = max(worst_path_qp,
                            max(abs(a - b) for a, b in zip(mine, qp)))
        worst_dp_qp = max(worst_dp_qp,
                          max(abs(a - b) for a, b in zip(dp, qp)))
    return worst_path_dp, worst_path_qp, worst_dp_qp


def test_c6_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst_float = 0.0
    for case in range(50):
        n = int(rng.integers(2, 51))
        inst = gen_random(n, 1000 + case)
        dual = to_dual(inst)
        path = solve_path(dual)
        top = float(path.events[-1].gamma) * 1.3 if path.events else 1.0
        gammas = [top * (k + 1) / 100 for k in range(100)]
        gaps = _oracle_gap(inst, path, gammas)
        worst_float = max(worst_float, *gaps)
    assert worst_float <= 1e-8, worst_float

    worst_exact = 0
    for case in range(50):
        n = int(rng.integers(2, 51))
        inst = gen_random(n, 2000 + case, RATIONAL)
        dual = to_dual(inst)
        path = solve_path(dual)
        top = path.events[-1].gamma * 2 if path.events else Fr(1)
        gammas = [top * Fr(k + 1, 100) for k in range(100)]
        gaps = _oracle_gap(inst, path, gammas)
        worst_exact = max(worst_exact, *gaps)
    assert worst_exact == 0, worst_exact
    print(f"\nACCEPTANCE C6 path vs both oracles: float sup-gap "
          f"{worst_float:.2e} <= 1e-8, rational gap exactly 0: PASS")


def test_c7_random_ensemble_scaling():
    sizes = (10, 20, 50, 100, 200, 500, 1000)
    mean_fuse = []
    mean_unfuse = []
    for n in sizes:
        fuses = []
        unfuses = []
        for seed in range(100):
            path = solve_path(to_dual(gen_random(n, seed)), segments="events")
            f, u = path.event_counts()
            fuses.append(f)
            unfuses.append(u)
        mean_fuse.append(np.mean(fuses))
        mean_unfuse.append(np.mean(unfuses))
    for n, f, u in zip(sizes, mean_fuse, mean_unfuse):
        assert u < 0.10 * f, (n, f, u)
    coeffs = np.polyfit(sizes, mean_fuse, 1)
    fitted = np.polyval(coeffs, sizes)
    ss_res = float(np.sum((np.array(mean_fuse) - fitted) ** 2))
    ss_tot = float(np.sum((np.array(mean_fuse) - np.mean(mean_fuse)) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    assert r2 >= 0.98, r2
    print(f"\nACCEPTANCE C7 random ensemble: unfuse/fuse ratios "
          f"{max(u / f for f, u in zip(mean_fuse, mean_unfuse)):.3f} < 0.10, "
          f"linear fit R^2 = {r2:.4f} >= 0.98: PASS")


def test_c8_conversion_round_trip():
    worst = 0.0
    for seed in range(10):
        inst = gen_random(10, 3000 + seed)
        path = solve_path(to_dual(inst))
        top = float(path.events[-1].gamma)
        for frac in (0.15, 0.6, 0.95, 1.4):
            gamma = top * frac
            budget = tv_budget_of(path, gamma)
            gamma2 = gamma_for_budget(path, budget)
            a = path.solution_at(gamma)
            b = path.solution_at(gamma2)
            worst = max(worst, max(abs(u - v) for u, v in zip(a, b)))
    assert worst <= 1e-9, worst

    for seed in range(10):
        inst = gen_random(9, 4000 + seed, RATIONAL)
        path = solve_path(to_dual(inst))
        top = path.events[-1].gamma
        for frac in (Fr(1, 5), Fr(2, 3), Fr(9, 8)):
            gamma = top * frac
            gamma2 = gamma_for_budget(path, tv_budget_of(path, gamma))
            assert path.solution_at(gamma2) == path.solution_at(gamma)
    print(f"\nACCEPTANCE C8 penalty<->budget round trip: float worst gap "
          f"{worst:.2e} <= 1e-9, rational exact: PASS")
