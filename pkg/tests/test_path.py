from fractions import Fraction as Fr
from math import inf, comb

import pytest
from hypothesis import given, settings, strategies as st

from wflpath import (F64, RATIONAL, EventKind, Instance, gen_1fl, gen_random,
                     gen_worst_case)
from wflpath.core import BoundaryState, replay_states
from wflpath.oracle import solve_fixed_gamma_dp, solve_fixed_gamma_qp
from wflpath.path import (free_point_line, initial_signs, pin_candidate,
                          release_candidate, solve_path, verify_path)
from wflpath.transform import to_dual

FIG1 = Instance.make([0, Fr(-1, 2), Fr(1, 2), Fr(1, 2)],
                     [Fr(1, 50), Fr(1, 2), Fr(1, 2)], RATIONAL)
N2 = Instance.make([0, 1], [1], RATIONAL)


def x_from_w(w):
    return [w[i + 1] - w[i] for i in range(len(w) - 1)]


class TestGeometry:
    def test_line_between_endpoints(self):
        dual = to_dual(N2)
        state = BoundaryState(3, gamma=Fr(0), signs=initial_signs(dual))
        state.remove(1)
        intercept, slope = free_point_line(dual, state, 1)
        assert (intercept, slope) == (Fr(-1, 2), Fr(0))

    def test_midway_point_weights_halve(self):
        inst = Instance.make([1, 2, 3, 4], [1, 1, 1], RATIONAL)
        dual = to_dual(inst)
        state = BoundaryState(5, gamma=Fr(0), signs=[1] * 5)
        state.remove(2)
        intercept, slope = free_point_line(dual, state, 2)
        t = dual.targets
        assert intercept == (t[1] + t[3]) / 2
        assert slope == (dual.weights[1] + dual.weights[3]) / 2

    def test_terminal_state_slopes_vanish(self):
        dual = to_dual(FIG1)
        state = BoundaryState(5, gamma=Fr(10), signs=[1] * 5)
        for i in (1, 2, 3):
            state.remove(i)
        for i in (1, 2, 3):
            intercept, slope = free_point_line(dual, state, i)
            assert slope == 0
            assert intercept == dual.targets[0] * Fr(4 - i, 4)

    def test_pinned_point_rejected(self):
        dual = to_dual(N2)
        state = BoundaryState(3, gamma=Fr(0), signs=[1, 1, 1])
        with pytest.raises(ValueError):
            free_point_line(dual, state, 1)


class TestCandidates:
    def test_release_two_point(self):
        dual = to_dual(N2)
        state = BoundaryState(3, gamma=Fr(0), signs=initial_signs(dual))
        cand = release_candidate(dual, state, 1)
        assert cand is not None
        assert cand.gamma == Fr(1, 2)
        assert cand.kind is EventKind.FUSE

    def test_release_parallel_track_never_fires(self):
        # all targets on one line: the pinned point's track is parallel to
        # (in fact identical with) its neighbors' interpolation
        inst = Instance.make([1, 1, 1], [1, 1], RATIONAL)
        dual = to_dual(inst)
        state = BoundaryState(4, gamma=Fr(3), signs=[1, -1, 1, 1])
        cand = release_candidate(dual, state, 1)
        assert cand is None or cand.gamma > 3

    def test_equal_weights_never_pin(self):
        # interpolation drift can never outrun the box when neighbor
        # weights do not exceed the point's own
        inst = gen_1fl([float(v) for v in gen_random(10, 1).y])
        dual = to_dual(inst)
        state = BoundaryState(11, gamma=0.0, signs=initial_signs(dual))
        state.remove(4)
        assert pin_candidate(dual, state, 4) is None

    def test_benchmark_repin(self):
        # after the first fuse the point re-approaches a boundary
        dual = to_dual(FIG1)
        path = solve_path(dual)
        repin = [e for e in path.events if e.kind is EventKind.UNFUSE]
        assert len(repin) == 1
        assert repin[0].gamma == Fr(25, 23) and repin[0].index == 2


class TestSolvePath:
    def test_single_point(self):
        path = solve_path(to_dual(Instance.make([7], [], RATIONAL)))
        assert path.events == ()

    def test_two_point_closed_form(self):
        path = solve_path(to_dual(N2))
        assert [(e.gamma, e.index, e.kind) for e in path.events] == \
            [(Fr(1, 2), 2, EventKind.FUSE)]
        assert path.solution_at(Fr(1, 4)) == [Fr(1, 4), Fr(3, 4)]
        assert path.solution_at(Fr(2)) == [Fr(1, 2), Fr(1, 2)]

    def test_benchmark_exact_event_log(self):
        path = solve_path(to_dual(FIG1))
        log = [(e.gamma, e.index, e.kind) for e in path.events]
        assert (Fr(25, 27), 2, EventKind.FUSE) in log
        assert (Fr(25, 23), 2, EventKind.UNFUSE) in log
        assert (Fr(25, 4), 2, EventKind.FUSE) in log

    def test_matches_qp_oracle_on_random_instances(self):
        for seed in range(6):
            inst = gen_random(10, seed)
            dual = to_dual(inst)
            path = solve_path(dual)
            top = float(path.events[-1].gamma) * 1.4 if path.events else 1.0
            for k in range(50):
                g = top * (k + 1) / 50
                mine = path.solution_at(g)
                ref = x_from_w(solve_fixed_gamma_qp(dual, g))
                assert max(abs(a - b) for a, b in zip(mine, ref)) < 1e-8

    def test_matches_dp_oracle_exactly_on_rationals(self):
        for seed in range(4):
            inst = gen_random(9, seed, RATIONAL)
            path = solve_path(to_dual(inst))
            top = path.events[-1].gamma * 2
            for k in range(30):
                g = top * Fr(k, 30)
                assert path.solution_at(g) == solve_fixed_gamma_dp(inst, g)

    def test_equal_weights_never_unfuse(self):
        for n in (2, 10, 100):
            for seed in range(10):
                inst = gen_1fl(gen_random(n, seed).y)
                path = solve_path(to_dual(inst), segments="events")
                fuse, unfuse = path.event_counts()
                assert unfuse == 0
                assert fuse <= n - 1

    def test_quadratic_event_ceiling(self):
        for dual in (to_dual(FIG1), gen_worst_case(12),
                     gen_worst_case(12, "doubling"),
                     to_dual(gen_random(40, 5))):
            path = solve_path(dual, segments="events")
            n = dual.n
            assert len(path.events) <= 8 * comb(n + 1, 2)

    def test_sign_constant_between_events(self):
        # between two consecutive events touching an index, its side is fixed
        dual = gen_worst_case(10)
        path = solve_path(dual)
        current = dict()
        for ev in path.events:
            if ev.kind is EventKind.UNFUSE:
                current[ev.index] = ev.sign
            else:
                if ev.index in current:
                    assert current.pop(ev.index) == ev.sign

    def test_gamma_nondecreasing(self):
        for dual in (to_dual(FIG1), gen_worst_case(15), to_dual(gen_random(60, 7))):
            path = solve_path(dual, segments="events")
            gammas = [e.gamma for e in path.events]
            assert all(a <= b for a, b in zip(gammas, gammas[1:]))

    def test_segments_argument(self):
        with pytest.raises(ValueError):
            solve_path(to_dual(N2), segments="sparse")

    def test_zero_weight_edge_stays_pinned(self):
        # a zero-weight edge decouples the chain: its point never fuses
        inst = Instance.make([0, 4, 1, 5], [1, 0, 1], RATIONAL)
        dual = to_dual(inst)
        path = solve_path(dual)
        assert all(e.index != 3 for e in path.events)
        big = Fr(1000)
        x = path.solution_at(big)
        assert x[0] == x[1] and x[2] == x[3]  # each side fuses internally
        assert x[1] != x[2]                   # but never across the cut
        assert path.solution_at(big) == solve_fixed_gamma_dp(inst, big)

    def test_all_zero_weights_keep_input(self):
        inst = Instance.make([3, -1], [0], RATIONAL)
        path = solve_path(to_dual(inst))
        assert path.events == ()
        assert path.solution_at(Fr(50)) == [Fr(3), Fr(-1)]


class TestVerify:
    def test_exact_path_verifies_with_zero_violation(self):
        dual = to_dual(FIG1)
        path = solve_path(dual)
        report = verify_path(dual, path, samples=5)
        assert report.passed and report.worst == 0.0

    def test_float_path_verifies_tightly(self):
        # samples * intervals gives over a thousand checked gammas
        inst = gen_random(100, 3)
        dual = to_dual(inst)
        path = solve_path(dual)
        report = verify_path(dual, path, samples=10, max_intervals=1024)
        assert report.passed
        assert report.worst <= 1e-9

    def test_oracle_hookup(self):
        inst = gen_random(12, 9, RATIONAL)
        dual = to_dual(inst)
        path = solve_path(dual)
        report = verify_path(
            dual, path, samples=2,
            oracle={"dp": lambda g: solve_fixed_gamma_dp(inst, g),
                    "qp": lambda g: x_from_w(solve_fixed_gamma_qp(dual, g))})
        assert report.passed
        assert report.checks["oracle_dp"] == 0.0
        assert report.checks["oracle_qp"] == 0.0

    def test_corrupted_table_fails(self):
        dual = to_dual(FIG1)
        path = solve_path(dual, segments="dense")
        tables = [list(map(tuple, t)) for t in path.tables]
        a, b = tables[2][2]
        tables[2][2] = (a, b + Fr(1, 7))
        from wflpath.core import SolutionPath
        bad = SolutionPath(dual, path.events, path.initial_signs,
                           tuple(tuple(t) for t in tables))
        report = verify_path(dual, bad, samples=3)
        assert not report.passed

    def test_corrupted_event_log_fails(self):
        dual = to_dual(FIG1)
        path = solve_path(dual, segments="events")
        from wflpath.core import PathEvent, SolutionPath
        events = list(path.events)
        events[1] = PathEvent(events[1].gamma * 2, events[1].index,
                              events[1].kind, events[1].sign)
        bad = SolutionPath(dual, tuple(events), path.initial_signs, None)
        report = verify_path(dual, bad, samples=3)
        assert not report.passed


@st.composite
def small_instances(draw):
    n = draw(st.integers(min_value=1, max_value=7))
    y = [draw(st.integers(-20, 20)) / 4 for _ in range(n)]
    alpha = [draw(st.integers(0, 12)) / 4 for _ in range(n - 1)]
    return Instance.make(y, alpha, RATIONAL)


@given(small_instances())
@settings(max_examples=60, deadline=None)
def test_property_path_matches_dp(inst):
    dual = to_dual(inst)
    path = solve_path(dual)
    top = (path.events[-1].gamma * 2 if path.events else Fr(2)) + 1
    for k in (0, 1, 3, 7):
        g = top * Fr(k, 7)
        assert path.solution_at(g) == solve_fixed_gamma_dp(inst, g)


@given(small_instances())
@settings(max_examples=40, deadline=None)
def test_property_paths_verify(inst):
    dual = to_dual(inst)
    path = solve_path(dual)
    report = verify_path(dual, path, samples=2)
    assert report.passed, report
