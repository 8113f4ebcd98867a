"""Instance factories and structural checkers.

Three families feed the experiments and the test suite:

* :func:`gen_worst_case` -- adversarial chain instances with quadratically
  many path events.  Weights grow like (i-1)^2 and targets oscillate in
  sign with rapidly growing magnitudes, so ever-wider prefixes of the
  chain flip together from one boundary side to the other (one "epoch"
  per prefix length).  Two variants are built:

  - ``cascade`` (default): magnitudes are derived from the alternation
    conditions themselves, with explicit margins, so every epoch provably
    materializes and the event count reaches n(n-1)/2.  Magnitudes grow
    super-exponentially (roughly like (n!)^2), hence rational arithmetic
    is mandatory beyond tiny n.
  - ``doubling``: the compact closed-form recursion whose magnitudes
    roughly double per step (increments g follow g <- 2g + 1).  Its event
    count still grows quadratically in practice, but the doubling growth
    is too slow to nest the boxes of long prefixes, so the full cascade
    (and the n(n-1)/2 count) is not reached.  Kept as a comparison point.

* :func:`gen_random` -- the random ensemble (uniform weights on [0,1],
  centered normal observations with standard deviation sqrt(10)).
* :func:`gen_1fl` -- equal weights, the classical special case whose
  paths only ever fuse.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .backends import Backend, F64, RATIONAL
from .core import BoundaryState, DualInstance, EventKind, Instance, SolutionPath

__all__ = ["WorstCaseParams", "worst_case_params", "gen_worst_case",
           "gen_random", "gen_1fl", "check_worst_case_conditions",
           "verify_alternating_epochs"]

WORST_CASE_VARIANTS = ("cascade", "doubling")


@dataclass(frozen=True)
class WorstCaseParams:
    """Sequences behind :func:`gen_worst_case`.

    ``magnitude[i]`` is the absolute target of chain point i+1 (the q
    sequence, starting 1, 2).  For the doubling variant ``increment``
    holds the g sequence driving the recursion q_{i+2} = 2*q_{i+1} - q_i
    + 2*g_{i+2} + 1 (g_3 = 1/3, g <- 2g + 1).  For the cascade variant
    ``epochs`` holds the planned flip values gamma_3 < ... < gamma_n the
    magnitudes were sized against.
    """

    n: int
    variant: str
    magnitude: tuple
    increment: Optional[tuple] = None
    epochs: Optional[tuple] = None


def _doubling_params(n: int) -> WorstCaseParams:
    inc = [Fraction(1, 3)]
    for _ in range(3, n):
        inc.append(2 * inc[-1] + 1)
    mag = [Fraction(1), Fraction(2)]
    for i in range(n - 2):
        mag.append(2 * mag[-1] - mag[-2] + 2 * inc[i] + 1)
    return WorstCaseParams(n, "doubling", tuple(mag), increment=tuple(inc))


def _cascade_params(n: int) -> WorstCaseParams:
    """Magnitudes sized directly from the alternation conditions.

    At epoch r the boxes of points 1..r-1 must be nested
    (q_i + q_{i+1} < (2i-1)*gamma_r), chains of three must force the
    middle point (q_i + 2q_{i+1} + q_{i+2} < 2*gamma_r), and the r-th box
    must overpower the prefix (reversed inequalities in q_r).  Each
    gamma_r is set to twice its lower bound and each q_r just above its
    own bound, so all conditions hold with margin and exactly.
    """
    mag = [Fraction(1), Fraction(2)]
    gammas = []
    gamma_prev = Fraction(0)
    for r in range(3, n + 1):
        lower = gamma_prev
        for i in range(1, r - 1):
            lower = max(lower, Fraction(mag[i - 1] + mag[i], 2 * i - 1))
        for i in range(1, r - 2):
            lower = max(lower, (mag[i - 1] + 2 * mag[i] + mag[i + 1]) / 2)
        gamma_r = 2 * lower
        need = max(
            2 * r * (r - 2) * gamma_r - 2 * mag[-1] - mag[-2],
            mag[-1] + ((r - 1) ** 2 + (r - 2) ** 2) * gamma_r,
            2 * mag[-1],
        )
        mag.append(need + 1)
        gammas.append(gamma_r)
        gamma_prev = gamma_r
    return WorstCaseParams(n, "cascade", tuple(mag), epochs=tuple(gammas))


def worst_case_params(n: int, variant: str = "cascade") -> WorstCaseParams:
    if n < 3:
        raise ValueError("the adversarial family needs n >= 3")
    if variant == "cascade":
        return _cascade_params(n)
    if variant == "doubling":
        return _doubling_params(n)
    raise ValueError(f"variant must be one of {WORST_CASE_VARIANTS}")


def gen_worst_case(n: int, variant: str = "cascade") -> DualInstance:
    """Adversarial chain instance with quadratically many path events;
    the default cascade variant realizes at least n(n-1)/2 of them.

    Emits the chain problem directly (the fitting instance is available
    through ``transform.from_dual``).  Always rational: the target
    magnitudes overflow doubles quickly in either variant.
    """
    params = worst_case_params(n, variant)
    targets = [(-1) ** (j + 1) * params.magnitude[j] for j in range(n)]
    targets.append(Fraction(0))
    weights = [Fraction(j * j) for j in range(n)] + [Fraction(0)]
    return DualInstance.make(targets, weights, RATIONAL)


def gen_random(n: int, seed: int, backend: Backend = F64) -> Instance:
    """Random ensemble instance, reproducible across platforms.

    Draws come from the PCG64 bit generator seeded with ``seed``: first
    n-1 uniform doubles on [0,1) are the edge weights, then consecutive
    uniform pairs (u1, u2) map through the Box-Muller transform
    ``sqrt(-2*ln(1-u1)) * (cos, sin)(2*pi*u2)`` and are scaled by
    sqrt(10) to give the observations (standard deviation sqrt(10)).
    Passing the rational backend converts the same double draws exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    alpha = rng.random(n - 1)
    pairs = (n + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.ravel(np.column_stack((radius * np.cos(angle),
                                  radius * np.sin(angle))))[:n]
    y = z * np.sqrt(10.0)
    return Instance.make([float(v) for v in y], [float(a) for a in alpha], backend)


def gen_1fl(y, backend: Backend = F64) -> Instance:
    """Equal-weights instance over the given observations."""
    y = list(y)
    return Instance.make(y, [1] * (len(y) - 1), backend)


def check_worst_case_conditions(dual: DualInstance, params: WorstCaseParams) -> dict:
    """Exact structural checks of an adversarial construction.

    Common checks: strictly convex and strictly increasing weights over
    the first n points, strictly increasing magnitudes starting from
    magnitude_2 > magnitude_1, strict magnitude convexity, and the
    alternating sign pattern of the targets.  For the cascade variant the
    epoch windows are additionally verified exactly against the stored
    gamma schedule: nestedness and middle-point forcing from below,
    prefix domination from above, and strictly increasing epochs.  For
    the doubling variant those gamma-dependent conditions have no valid
    schedule; the realized alternation is measured on a solved path by
    :func:`verify_alternating_epochs` instead.  Returns {condition: bool}.
    """
    n = params.n
    w = dual.weights
    t = dual.targets
    q = params.magnitude
    results = {
        "weights_strictly_convex": all(
            w[j + 2] - 2 * w[j + 1] + w[j] > 0 for j in range(n - 2)),
        "weights_strictly_increasing": all(
            w[j + 1] > w[j] for j in range(n - 1)),
        "magnitude_step_up": q[1] > q[0],
        "magnitude_strictly_convex": all(
            q[j + 2] - 2 * q[j + 1] + q[j] > 0 for j in range(n - 2)),
        "magnitude_strictly_increasing": all(
            q[j + 1] > q[j] for j in range(n - 1)),
        "alternating_targets": all(
            t[j] == (-1) ** (j + 1) * q[j] for j in range(n)) and t[n] == 0,
    }
    if params.variant == "cascade":
        gammas = params.epochs
        nested = middle = force = True
        for r in range(3, n + 1):
            g = gammas[r - 3]
            nested = nested and all(
                q[i - 1] + q[i] < (2 * i - 1) * g for i in range(1, r - 1))
            middle = middle and all(
                q[i - 1] + 2 * q[i] + q[i + 1] < 2 * g for i in range(1, r - 2))
            force = force and (
                q[r - 1] + 2 * q[r - 2] + q[r - 3] > 2 * r * (r - 2) * g
                and q[r - 1] > q[r - 2] + ((r - 1) ** 2 + (r - 2) ** 2) * g)
        results["epoch_nestedness"] = nested
        results["epoch_middle_forcing"] = middle
        results["epoch_prefix_domination"] = force
        results["epochs_strictly_increasing"] = all(
            gammas[k] < gammas[k + 1] for k in range(len(gammas) - 1))
    return results


def verify_alternating_epochs(path: SolutionPath) -> int:
    """Count the alternating prefix epochs a solved path realizes.

    Replays the event log and watches the maximal prefix of interior
    points (1-based points 2, 3, ...) that are simultaneously pinned with
    one common side.  Epoch r (r = 3..n) requires the first r-2 interior
    points pinned on side (-1)^r; epochs must appear in increasing r with
    alternating sides.  The cascade family realizes all n-2 of them;
    ordinary instances stall at 0 or 1.
    """
    dual = path.dual
    n = dual.n
    state = BoundaryState(dual.npoints, gamma=0, signs=path.initial_signs)

    def prefix_run():
        if 1 not in state:
            return 0, 0
        sigma = state.signs[1]
        m = 1
        j = 2
        while j <= n - 1 and j in state and state.signs[j] == sigma:
            m += 1
            j += 1
        return m, sigma

    count = 0
    next_r = 3

    def advance():
        nonlocal count, next_r
        m, sigma = prefix_run()
        while next_r <= n and m >= next_r - 2 \
                and sigma == (1 if next_r % 2 == 0 else -1):
            count += 1
            next_r += 1

    advance()
    for ev in path.events:
        i = ev.index - 1
        if ev.kind is EventKind.FUSE:
            state.remove(i)
        else:
            state.insert(i)
            state.signs[i] = ev.sign
        advance()
    return count
