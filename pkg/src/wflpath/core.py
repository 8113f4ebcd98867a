"""Domain types and path evaluation.

The solver works on two coupled problems:

* the *fitting problem*: minimize ``1/2 * sum((x_t - y_t)^2) +
  gamma * sum(alpha_t * |x_{t+1} - x_t|)`` over sequences x of length n;
* the *chain problem*: minimize ``sum((w_{i+1} - w_i)^2)`` over chains w of
  length n+1 subject to per-point boxes ``|w_i - targets_i| <=
  gamma * weights_i``, with ``x_t = w_{t+1} - w_t``.

A solution path is piecewise linear in gamma.  Its segments are fully
described by which chain points touch a box boundary (the pinned set B)
and on which side; everything else interpolates linearly between pinned
neighbors.  ``SolutionPath`` stores the ordered event log of pinned-set
changes and evaluates any segment either from a dense per-interval
coefficient table or by replaying events.

Point indices are 1-based in documentation and in ``PathEvent.index``
(points 1..n+1, matching the usual presentation); internal storage is
0-based.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import inf, isfinite
from typing import Optional, Sequence

from .backends import Backend, F64, RATIONAL, get_backend

__all__ = [
    "Instance", "DualInstance", "BoundaryState", "PathEvent", "EventKind",
    "SolutionPath", "InvalidInstanceError",
]


class InvalidInstanceError(ValueError):
    """Raised for malformed problem data (bad lengths, negative weights)."""


def _coerce_vector(values, backend: Backend):
    out = tuple(backend.scalar(v) for v in values)
    if not backend.exact and not all(isfinite(v) for v in out):
        raise InvalidInstanceError("values must be finite")
    return out


@dataclass(frozen=True)
class Instance:
    """Fitting-problem data: observations ``y`` (length n) and edge
    weights ``alpha`` (length n-1, all >= 0)."""

    y: tuple
    alpha: tuple
    backend: Backend = F64

    @classmethod
    def make(cls, y, alpha, backend: Backend | str = F64) -> "Instance":
        if isinstance(backend, str):
            backend = get_backend(backend)
        y = _coerce_vector(y, backend)
        alpha = _coerce_vector(alpha, backend)
        if len(y) < 1:
            raise InvalidInstanceError("need at least one observation")
        if len(alpha) != len(y) - 1:
            raise InvalidInstanceError(
                f"expected {len(y) - 1} edge weights, got {len(alpha)}")
        if any(a < 0 for a in alpha):
            raise InvalidInstanceError("edge weights must be nonnegative")
        return cls(y, alpha, backend)

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class DualInstance:
    """Chain-problem data.

    ``targets`` has length n+1 with ``targets[-1] == 0``; the box of point
    i at parameter gamma is ``targets[i] +/- gamma * weights[i]``.  The
    two endpoints carry weight 0 and are pinned forever.
    """

    targets: tuple
    weights: tuple
    backend: Backend = F64

    @classmethod
    def make(cls, targets, weights, backend: Backend | str = F64) -> "DualInstance":
        if isinstance(backend, str):
            backend = get_backend(backend)
        targets = _coerce_vector(targets, backend)
        weights = _coerce_vector(weights, backend)
        if len(targets) < 2:
            raise InvalidInstanceError("chain needs at least two points")
        if len(weights) != len(targets):
            raise InvalidInstanceError("targets and weights must have equal length")
        if targets[-1] != 0:
            raise InvalidInstanceError("last chain target must be 0")
        if weights[0] != 0 or weights[-1] != 0:
            raise InvalidInstanceError("endpoint weights must be 0")
        if any(a < 0 for a in weights):
            raise InvalidInstanceError("weights must be nonnegative")
        return cls(targets, weights, backend)

    @property
    def npoints(self) -> int:
        return len(self.targets)

    @property
    def n(self) -> int:
        """Length of the fitting-problem input this chain corresponds to."""
        return len(self.targets) - 1


class EventKind(enum.Enum):
    """What happened to the pair (x_{i-1}, x_i) at a critical value.

    FUSE: chain point i moved off its boundary (became free), so the pair
    is equal on the following segment.  UNFUSE: point i was pinned back
    onto a boundary, splitting the pair apart.
    """

    FUSE = "fuse"
    UNFUSE = "unfuse"


@dataclass(frozen=True)
class PathEvent:
    """One pinned-set change: at ``gamma``, chain point ``index`` (1-based,
    in 2..n) either fused or unfused; ``sign`` is the boundary side
    involved (+1 upper, -1 lower)."""

    gamma: object
    index: int
    kind: EventKind
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")


class BoundaryState:
    """Pinned set of the homotopy, as a doubly linked list over 0..n.

    Supports O(1) predecessor/successor/remove, and O(1) insert when the
    neighbors are known.  Owned by a single solver or replay; it is the
    one mutable object in this module.
    """

    __slots__ = ("gamma", "npoints", "signs", "_prev", "_next", "_member")

    def __init__(self, npoints: int, gamma=0, signs: Optional[Sequence[int]] = None):
        self.npoints = npoints
        self.gamma = gamma
        self.signs = list(signs) if signs is not None else [1] * npoints
        self._prev = list(range(-1, npoints - 1))
        self._next = list(range(1, npoints + 1))
        self._member = [True] * npoints

    def __contains__(self, i: int) -> bool:
        return self._member[i]

    def pred(self, i: int) -> int:
        return self._prev[i]

    def succ(self, i: int) -> int:
        return self._next[i]

    def remove(self, i: int) -> None:
        if not self._member[i]:
            raise ValueError(f"point {i} is not pinned")
        if i == 0 or i == self.npoints - 1:
            raise ValueError("endpoints stay pinned")
        p, s = self._prev[i], self._next[i]
        self._next[p] = s
        self._prev[s] = p
        self._member[i] = False

    def insert(self, i: int, left: Optional[int] = None, right: Optional[int] = None) -> None:
        """Pin point i again.  Neighbors may be passed when known;
        otherwise they are found by scanning outward."""
        if self._member[i]:
            raise ValueError(f"point {i} is already pinned")
        if left is None:
            left = i - 1
            while not self._member[left]:
                left -= 1
        if right is None:
            right = i + 1
            while not self._member[right]:
                right += 1
        self._prev[i], self._next[i] = left, right
        self._next[left] = i
        self._prev[right] = i
        self._member[i] = True

    def members(self):
        i = 0
        last = self.npoints - 1
        while True:
            yield i
            if i == last:
                return
            i = self._next[i]

    def pinned_count(self) -> int:
        return sum(1 for _ in self.members())

    def brackets(self, i: int) -> tuple[int, int]:
        """Nearest pinned neighbors strictly left/right of free point i."""
        left = i - 1
        while not self._member[left]:
            left -= 1
        right = i + 1
        while not self._member[right]:
            right += 1
        return left, right

    def copy(self) -> "BoundaryState":
        dup = BoundaryState.__new__(BoundaryState)
        dup.npoints = self.npoints
        dup.gamma = self.gamma
        dup.signs = list(self.signs)
        dup._prev = list(self._prev)
        dup._next = list(self._next)
        dup._member = list(self._member)
        return dup


def segment_coefficients(dual: DualInstance, state: BoundaryState) -> list:
    """Per-point (intercept, slope) of w_i(gamma) for the segment described
    by ``state``: pinned points ride their boundary track, free points
    divide the gap between pinned neighbors evenly."""
    targets, weights = dual.targets, dual.weights
    ratio = dual.backend.ratio
    coeffs: list = [None] * dual.npoints
    prev = 0
    for m in state.members():
        coeffs[m] = (targets[m], state.signs[m] * weights[m])
        if m - prev > 1:
            a_int, a_slp = coeffs[prev]
            b_int, b_slp = coeffs[m]
            span = m - prev
            for i in range(prev + 1, m):
                f = ratio(m - i, span)
                g = ratio(i - prev, span)
                coeffs[i] = (a_int * f + b_int * g, a_slp * f + b_slp * g)
        prev = m
    return coeffs


def replay_states(dual: DualInstance, initial_signs: Sequence[int], events):
    """Yield the boundary state for every segment, in order.

    Yields T+1 states for T events: the state before any event, then the
    state after each event.  The same (mutated) object is yielded each
    time; copy it if you need to keep one.
    """
    state = BoundaryState(dual.npoints, gamma=0, signs=initial_signs)
    yield state
    for ev in events:
        i = ev.index - 1
        if ev.kind is EventKind.FUSE:
            state.remove(i)
        else:
            state.insert(i)
            state.signs[i] = ev.sign
        state.gamma = ev.gamma
        yield state


@dataclass(frozen=True)
class SolutionPath:
    """Exact piecewise-linear path of the chain (and fitting) solution.

    ``events`` is the ordered log of pinned-set changes.  Segment k lives
    on [gamma_k, gamma_{k+1}] (gamma_0 = 0, the last segment extends to
    infinity).  ``initial_signs`` fixes the boundary sides on the first
    segment so that every later segment is reproducible by replay.

    When ``tables`` is present it holds the dense per-segment coefficient
    table; otherwise evaluation replays the event log (slower but O(n)
    memory).
    """

    dual: DualInstance
    events: tuple
    initial_signs: tuple
    tables: Optional[tuple] = field(default=None, repr=False)

    @cached_property
    def _event_gammas(self):
        return [ev.gamma for ev in self.events]

    @property
    def backend(self) -> Backend:
        return self.dual.backend

    def segment_index(self, gamma) -> int:
        """Index of the segment containing gamma (post-event side at ties)."""
        return bisect_right(self._event_gammas, gamma)

    def segment_span(self, k: int):
        """(lo, hi) of segment k; hi is None for the terminal segment."""
        lo = 0 if k == 0 else self.events[k - 1].gamma
        hi = self.events[k].gamma if k < len(self.events) else None
        return lo, hi

    def coefficients(self, k: int) -> list:
        """(intercept, slope) per chain point on segment k."""
        if self.tables is not None:
            return list(self.tables[k])
        for idx, state in enumerate(replay_states(self.dual, self.initial_signs, self.events)):
            if idx == k:
                return segment_coefficients(self.dual, state)
        raise IndexError(k)

    def chain_at(self, gamma) -> list:
        """Chain values w(gamma), length n+1."""
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        coeffs = self.coefficients(self.segment_index(gamma))
        return [a + b * gamma for a, b in coeffs]

    def solution_at(self, gamma) -> list:
        """Fitting-problem solution x(gamma), length n (consecutive
        differences of the chain)."""
        w = self.chain_at(gamma)
        return [w[i + 1] - w[i] for i in range(len(w) - 1)]

    def event_counts(self) -> tuple[int, int]:
        """(fuse, unfuse) event totals."""
        fuse = sum(1 for ev in self.events if ev.kind is EventKind.FUSE)
        return fuse, len(self.events) - fuse

    def segment_count(self, distinct_slopes: bool = False) -> int:
        """Number of path segments.

        By default this counts intervals between pinned-set changes
        (#events + 1).  With ``distinct_slopes`` zero-length intervals
        (from simultaneous events) are dropped and adjacent intervals
        whose solution coefficients coincide are merged, which matches
        counting visually distinct linear pieces of x(gamma).
        """
        if not distinct_slopes:
            return len(self.events) + 1
        count = 0
        last = None
        k = 0
        for state in replay_states(self.dual, self.initial_signs, self.events):
            lo, hi = self.segment_span(k)
            k += 1
            if hi is not None and hi == lo:
                continue
            w = segment_coefficients(self.dual, state)
            x = tuple((w[i + 1][0] - w[i][0], w[i + 1][1] - w[i][1])
                      for i in range(len(w) - 1))
            if x != last:
                count += 1
                last = x
        return count

    def fused_intervals(self, pair: int, atol: float = 1e-12) -> list:
        """Maximal gamma-intervals on which x_pair == x_{pair+1} identically
        (pair is 1-based, 1..n-1).  Returns closed [lo, hi] pairs; hi is
        ``math.inf`` when the run extends forever.  Isolated touch points
        are not intervals and are not reported."""
        if not 1 <= pair <= self.dual.n - 1:
            raise ValueError(f"pair must be in 1..{self.dual.n - 1}")
        p = pair  # 0-based chain point whose freedom fuses the pair
        exact = self.backend.exact
        runs = []
        current = None
        k = 0
        for state in replay_states(self.dual, self.initial_signs, self.events):
            w = segment_coefficients(self.dual, state)
            a = w[p + 1][0] - 2 * w[p][0] + w[p - 1][0]
            b = w[p + 1][1] - 2 * w[p][1] + w[p - 1][1]
            lo, hi = self.segment_span(k)
            k += 1
            if hi is not None and hi == lo:
                continue
            zero = (a == 0 and b == 0) if exact else (abs(a) <= atol and abs(b) <= atol)
            if zero:
                if current is None:
                    current = [lo, hi]
                elif current[1] == lo or current[1] is None:
                    current[1] = hi
                else:
                    runs.append(current)
                    current = [lo, hi]
            elif current is not None:
                runs.append(current)
                current = None
        if current is not None:
            runs.append(current)
        return [(lo, inf if hi is None else hi) for lo, hi in runs]


def build_tables(dual: DualInstance, initial_signs, events) -> tuple:
    """Dense per-segment coefficient tables (O((T+1) * (n+1)) memory)."""
    return tuple(
        tuple(segment_coefficients(dual, state))
        for state in replay_states(dual, initial_signs, events)
    )


def evaluate_many(path: SolutionPath, gammas) -> list:
    """Chain values at several gammas in one ordered replay sweep.

    Returns a list of (gamma, w) in ascending gamma order regardless of
    the input order.  Gammas equal to an event value evaluate on the
    post-event segment, like ``chain_at``.
    """
    order = sorted(gammas)
    out = []
    pos = 0
    k = 0
    for state in replay_states(path.dual, path.initial_signs, path.events):
        hi = path.events[k].gamma if k < len(path.events) else None
        coeffs = None
        while pos < len(order) and (hi is None or order[pos] < hi):
            if coeffs is None:
                coeffs = segment_coefficients(path.dual, state)
            g = order[pos]
            out.append((g, [a + b * g for a, b in coeffs]))
            pos += 1
        if pos == len(order):
            break
        k += 1
    return out
