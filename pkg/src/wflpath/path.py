"""Event-driven homotopy solver for the chain problem.

Starting at gamma = 0, where every box is a single point and every chain
point is pinned, the solver advances gamma from one critical value to the
next.  Between events the picture is frozen: pinned points ride their
boundary tracks ``targets_i + sign_i * weights_i * gamma`` and free
points divide the gap between their pinned neighbors evenly, so every
coordinate is linear in gamma.  An event is a pinned point whose box
constraint stops pulling (it becomes free: the pair fuses) or a free
point overtaken by one of its boundary tracks (it is pinned: the pair
un-fuses).

Each interior point owns at most one pending candidate event, kept in a
binary min-heap keyed by gamma.  Candidates carry a per-index version
stamp; events bump the stamps of every point whose bracketing changed, so
stale heap entries are discarded lazily on pop.  Ties in gamma are
processed one at a time, smallest index first, a release before a pin of
the same index; the just-processed transition of an index is suppressed
at the same gamma until a neighboring event touches it again, which rules
out pin/release cycles that make no progress.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import (BoundaryState, DualInstance, EventKind, PathEvent,
                   SolutionPath, build_tables, segment_coefficients)

__all__ = ["Candidate", "PathNumericalError", "free_point_line",
           "initial_signs", "pin_candidate", "release_candidate",
           "solve_path", "verify_path", "VerifyReport"]

# dense per-segment tables are kept when (#segments)*(#points) stays under
DENSE_TABLE_BUDGET = 250_000

_RANK = {EventKind.FUSE: 0, EventKind.UNFUSE: 1}


class PathNumericalError(RuntimeError):
    """The float-backend solve produced an inconsistent segment (or blew
    the theoretical event budget): the result cannot be trusted."""


@dataclass(frozen=True)
class Candidate:
    """A possible next event for one point: at ``gamma`` point ``index``
    (0-based here) would fuse (kind FUSE, leaving side ``sign``) or be
    pinned (kind UNFUSE, onto side ``sign``).  ``left``/``right`` are the
    pinned brackets the prediction was computed from; ``version`` is the
    owner's staleness stamp."""

    index: int
    kind: EventKind
    gamma: object
    sign: int
    left: int
    right: int
    version: int = 0


def _bracket_line(dual: DualInstance, state: BoundaryState, i: int,
                  left: int, right: int):
    """(intercept, slope) in gamma of the straight line through the
    boundary tracks of pinned points ``left`` and ``right``, evaluated at
    position i."""
    t, w = dual.targets, dual.weights
    f = dual.backend.ratio(right - i, right - left)
    g = dual.backend.ratio(i - left, right - left)
    return (t[left] * f + t[right] * g,
            state.signs[left] * w[left] * f + state.signs[right] * w[right] * g)


def free_point_line(dual: DualInstance, state: BoundaryState, i: int,
                    left: Optional[int] = None, right: Optional[int] = None):
    """(intercept, slope) of the interpolated position of point i between
    its pinned brackets, as a function of gamma.  i must be free."""
    if i in state:
        raise ValueError(f"point {i} is pinned")
    if left is None or right is None:
        left, right = state.brackets(i)
    return _bracket_line(dual, state, i, left, right)


def _clamp_gamma(backend, gamma, now):
    """Keep crossings at or after the current gamma; tolerate float dust."""
    if gamma >= now:
        return gamma
    if backend.same_gamma(gamma, now):
        return now
    return None


def pin_candidate(dual: DualInstance, state: BoundaryState, i: int,
                  left: Optional[int] = None, right: Optional[int] = None,
                  version: int = 0) -> Optional[Candidate]:
    """Earliest gamma >= state.gamma at which free point i meets one of
    its boundary tracks while drifting out of the box, or None."""
    if left is None or right is None:
        left, right = state.brackets(i)
    w = dual.weights
    wi = w[i]
    if w[left] <= wi and w[right] <= wi:
        # the interpolated drift can never outrun the box
        return None
    backend = dual.backend
    intercept, slope = free_point_line(dual, state, i, left, right)
    best = None
    best_sign = 0
    for s in (1, -1):
        if not s * slope > wi:
            continue
        gamma = backend.crossing(dual.targets[i] - intercept, slope - s * wi)
        if gamma is None:
            continue
        gamma = _clamp_gamma(backend, gamma, state.gamma)
        if gamma is None:
            continue
        if best is None or gamma < best:
            best, best_sign = gamma, s
    if best is None:
        return None
    return Candidate(i, EventKind.UNFUSE, best, best_sign, left, right, version)


def release_candidate(dual: DualInstance, state: BoundaryState, i: int,
                      version: int = 0) -> Optional[Candidate]:
    """Earliest gamma >= state.gamma at which pinned point i's constraint
    stops pulling: the straight line between its pinned neighbors
    (skipping i) crosses i's boundary track moving strictly into the box.
    None when the point stays pinned."""
    if i not in state:
        raise ValueError(f"point {i} is free")
    left, right = state.pred(i), state.succ(i)
    backend = dual.backend
    t, w = dual.targets, dual.weights
    intercept, slope = _bracket_line(dual, state, i, left, right)
    s = state.signs[i]
    if not s * slope < w[i]:
        return None
    gamma = backend.crossing(t[i] - intercept, slope - s * w[i])
    if gamma is None:
        return None
    gamma = _clamp_gamma(backend, gamma, state.gamma)
    if gamma is None:
        return None
    return Candidate(i, EventKind.FUSE, gamma, s, left, right, version)


def initial_signs(dual: DualInstance) -> tuple:
    """Boundary sides at gamma = 0+.

    Every point starts pinned.  The side it will hold on the first open
    interval is the direction its neighbors pull it: the sign of
    ``targets[i-1] + targets[i+1] - 2*targets[i]``.  Points pulled neither
    way (locally collinear targets) keep +1 and sort themselves out
    through zero-gamma events.
    """
    t = dual.targets
    signs = [1] * dual.npoints
    for i in range(1, dual.npoints - 1):
        pull = t[i - 1] + t[i + 1] - 2 * t[i]
        if pull < 0:
            signs[i] = -1
    return tuple(signs)


def solve_path(dual: DualInstance, segments: str = "auto",
               check: bool = True) -> SolutionPath:
    """Trace the full solution path of the chain problem.

    ``segments`` controls storage: "dense" builds the per-segment
    coefficient table, "events" keeps only the event log (evaluation
    replays it), "auto" picks dense while it fits ``DENSE_TABLE_BUDGET``.

    Raises :class:`PathNumericalError` on the float backend when a new
    segment fails its feasibility check, or when the event count exceeds
    the quadratic budget (both signal breakdown, not valid output).
    """
    if segments not in ("auto", "dense", "events"):
        raise ValueError("segments must be auto, dense or events")
    backend = dual.backend
    npts = dual.npoints
    start_signs = initial_signs(dual)
    state = BoundaryState(npts, gamma=backend.scalar(0), signs=start_signs)
    targets, weights = dual.targets, dual.weights

    versions = [0] * npts
    marks: dict = {}
    heap: list = []

    def push(j: int, cand: Optional[Candidate]) -> None:
        if cand is None:
            return
        done = marks.get(j)
        if done is not None and done[0] is cand.kind \
                and backend.same_gamma(done[1], cand.gamma):
            return
        heapq.heappush(heap, (cand.gamma, j, _RANK[cand.kind], versions[j], cand))

    def refresh_pinned(j: int) -> None:
        versions[j] += 1
        if j == 0 or j == npts - 1 or weights[j] == 0:
            return
        push(j, release_candidate(dual, state, j, version=versions[j]))

    def refresh_free(j: int, left: int, right: int) -> None:
        versions[j] += 1
        push(j, pin_candidate(dual, state, j, left, right, version=versions[j]))

    def refresh_span(left: int, right: int) -> None:
        a = left
        while True:
            refresh_pinned(a)
            if a >= right:
                break
            b = state.succ(a)
            for j in range(a + 1, b):
                refresh_free(j, a, b)
            a = b

    def pop_next() -> Optional[Candidate]:
        def drop_stale():
            while heap and heap[0][3] != versions[heap[0][1]]:
                heapq.heappop(heap)
        drop_stale()
        if not heap:
            return None
        first = heapq.heappop(heap)
        burst = [first]
        while True:
            drop_stale()
            if heap and backend.same_gamma(heap[0][0], first[0]):
                burst.append(heapq.heappop(heap))
            else:
                break
        best = min(burst, key=lambda e: (e[1], e[2]))
        for e in burst:
            if e is not best:
                heapq.heappush(heap, e)
        return best[4]

    for j in range(1, npts - 1):
        refresh_pinned(j)

    events = []
    budget = 4 * npts * npts + 8
    feas_check = check and not backend.exact
    while True:
        cand = pop_next()
        if cand is None:
            break
        i = cand.index
        gamma = cand.gamma if cand.gamma >= state.gamma else state.gamma
        if cand.kind is EventKind.FUSE:
            left, right = state.pred(i), state.succ(i)
            sign = state.signs[i]
            state.remove(i)
        else:
            left, right = cand.left, cand.right
            sign = cand.sign
            state.insert(i, left, right)
            state.signs[i] = sign
        state.gamma = gamma
        events.append(PathEvent(gamma, i + 1, cand.kind, sign))
        marks[i] = (cand.kind, gamma)
        if len(events) > budget:
            raise PathNumericalError(
                f"event count exceeded the quadratic budget ({budget})")

        if feas_check:
            _check_span_feasibility(dual, state, left, right, gamma)

        for j in range(left, right + 1):
            if j != i:
                marks.pop(j, None)
        refresh_span(left, right)
        if state.succ(0) == npts - 1:
            break

    events = tuple(events)
    tables = None
    if segments == "dense" or (
            segments == "auto"
            and npts * (len(events) + 1) <= DENSE_TABLE_BUDGET):
        tables = build_tables(dual, start_signs, events)
    return SolutionPath(dual, events, start_signs, tables)


def _check_span_feasibility(dual, state, left, right, gamma):
    """Float-backend sanity check of the freshly changed segment: every
    free point in the span must sit inside its box at the event gamma."""
    t, w = dual.targets, dual.weights
    tol = 1e-9
    a = left
    while a != right:
        b = state.succ(a)
        if b - a > 1:
            va = t[a] + state.signs[a] * w[a] * gamma
            vb = t[b] + state.signs[b] * w[b] * gamma
            for i in range(a + 1, b):
                v = va + (vb - va) * (i - a) / (b - a)
                slack = abs(v - t[i]) - w[i] * gamma
                if slack > tol * max(1.0, abs(t[i]), w[i] * gamma):
                    raise PathNumericalError(
                        f"segment infeasible at gamma={gamma!r}: point {i + 1} "
                        f"violates its box by {float(slack):.3e}")
        a = b


@dataclass
class VerifyReport:
    """Outcome of :func:`verify_path`: per-check worst violations (as
    floats) and the overall verdict."""

    passed: bool
    worst: float
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __str__(self):
        lines = [f"verify: {'PASS' if self.passed else 'FAIL'} "
                 f"(worst violation {self.worst:.3e})"]
        for name, value in sorted(self.checks.items()):
            lines.append(f"  {name}: {value:.3e}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _sample_gammas(backend, lo, hi, samples):
    if hi is None:
        step = max(lo, backend.scalar(1))
        return [lo + step * backend.ratio(j + 1, 2) for j in range(samples)]
    if hi == lo:
        return []
    return [lo + (hi - lo) * backend.ratio(j + 1, samples + 1)
            for j in range(samples)]


def verify_path(dual: DualInstance, path: SolutionPath, samples: int = 4,
                oracle: Optional[Callable] = None, oracle_tol: float = 1e-8,
                max_intervals: int = 512) -> VerifyReport:
    """Self-check of a solved path against the chain-problem data.

    Checks continuity at every event, box feasibility and free-point
    alignment at ``samples`` gammas per interval (a deterministic subset
    of at most ``max_intervals`` intervals on long paths), agreement of
    any stored dense table with the event log, and optionally sup-norm
    agreement of the fitting solution with independent fixed-gamma
    solvers (``oracle`` is a callable ``gamma -> x`` or a dict of named
    callables).  Tolerances are zero on the rational backend.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    backend = dual.backend
    exact = backend.exact
    cont_tol = 0.0 if exact else 1e-9
    feas_tol = 0.0 if exact else 1e-12
    align_tol = 0.0 if exact else 1e-9
    t, w = dual.targets, dual.weights
    npts = dual.npoints
    nseg = len(path.events) + 1

    if oracle is None:
        oracles = {}
    elif callable(oracle):
        oracles = {"oracle": oracle}
    else:
        oracles = {f"oracle_{name}": fn for name, fn in oracle.items()}

    checks = {"continuity": 0.0, "feasibility": 0.0, "alignment": 0.0}
    if path.tables is not None:
        checks["tables"] = 0.0
    for name in oracles:
        checks[name] = 0.0
    notes = []

    stride = max(1, -(-nseg // max_intervals))
    if stride > 1:
        notes.append(f"sampled every {stride}th interval of {nseg}")

    state = BoundaryState(npts, gamma=backend.scalar(0), signs=path.initial_signs)
    live = segment_coefficients(dual, state)
    oracle_gammas = []

    for k in range(nseg):
        lo = backend.scalar(0) if k == 0 else path.events[k - 1].gamma
        hi = path.events[k].gamma if k < len(path.events) else None
        coeffs = live
        if path.tables is not None:
            table = path.tables[k]
            dev = max((abs(ta - la) + abs(tb - lb)
                       for (ta, tb), (la, lb) in zip(table, live)), default=0)
            checks["tables"] = max(checks["tables"], float(dev))
            coeffs = table
        if k % stride == 0:
            for gamma in _sample_gammas(backend, lo, hi, samples):
                vals = [a + b * gamma for a, b in coeffs]
                for i in range(npts):
                    slack = abs(vals[i] - t[i]) - w[i] * gamma
                    if slack > 0:
                        checks["feasibility"] = max(checks["feasibility"], float(slack))
                prev = 0
                for m in state.members():
                    if m - prev > 1:
                        for i in range(prev + 1, m):
                            f = backend.ratio(m - i, m - prev)
                            g2 = backend.ratio(i - prev, m - prev)
                            dev = abs(vals[i] - (vals[prev] * f + vals[m] * g2))
                            checks["alignment"] = max(checks["alignment"], float(dev))
                    prev = m
                if oracles and len(oracle_gammas) < max_intervals:
                    oracle_gammas.append(gamma)
        if k == len(path.events):
            break
        # cross the event: continuity of the chain values at its gamma
        ev = path.events[k]
        gamma_c = ev.gamma
        i = ev.index - 1
        if ev.kind is EventKind.FUSE:
            left, right = state.pred(i), state.succ(i)
        else:
            left, right = state.brackets(i)
        span = range(npts) if path.tables is not None else range(left, right + 1)
        before = {j: coeffs[j][0] + coeffs[j][1] * gamma_c for j in span}
        if ev.kind is EventKind.FUSE:
            state.remove(i)
        else:
            state.insert(i, left, right)
            state.signs[i] = ev.sign
        state.gamma = gamma_c
        for j in range(left, right + 1):
            live[j] = (t[j], state.signs[j] * w[j]) if j in state else None
        a = left
        while a != right:
            b = state.succ(a)
            if b - a > 1:
                a_int, a_slp = live[a]
                b_int, b_slp = live[b]
                for j in range(a + 1, b):
                    f = backend.ratio(b - j, b - a)
                    g2 = backend.ratio(j - a, b - a)
                    live[j] = (a_int * f + b_int * g2, a_slp * f + b_slp * g2)
            a = b
        after = path.tables[k + 1] if path.tables is not None else live
        dev = max(abs((after[j][0] + after[j][1] * gamma_c) - before[j])
                  for j in span)
        checks["continuity"] = max(checks["continuity"], float(dev))

    if oracles:
        solutions = [(g, path.solution_at(g)) for g in oracle_gammas]
        for name, fn in oracles.items():
            for gamma, mine in solutions:
                theirs = fn(gamma)
                dev = max(abs(a - b) for a, b in zip(mine, theirs))
                checks[name] = max(checks[name], float(dev))

    eff_oracle_tol = 0.0 if exact else oracle_tol
    passed = (checks["continuity"] <= cont_tol
              and checks["feasibility"] <= feas_tol
              and checks["alignment"] <= align_tol
              and checks.get("tables", 0.0) <= align_tol
              and all(checks[name] <= eff_oracle_tol for name in oracles))
    worst = max(checks.values(), default=0.0)
    return VerifyReport(passed, worst, checks, notes)
