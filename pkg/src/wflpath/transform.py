"""Conversions between the fitting problem and the chain problem, and
between the penalized and the TV-constrained formulations.

The chain problem attached to an instance (y, alpha) has
``targets_i = -sum(y_i..y_n)`` (1-based, with ``targets_{n+1} = 0``) and
weights equal to alpha shifted by one slot, zero at both ends.  The map
is a bijection: ``y_i = targets_{i+1} - targets_i`` and
``alpha_i = weights_{i+1}`` invert it exactly.

The constrained formulation replaces the penalty by the budget
``sum(alpha_t * |x_{t+1} - x_t|) <= budget``.  Along a solved path the
weighted total variation of x(gamma) is a non-increasing piecewise-linear
function of gamma, so the two formulations convert into each other by
evaluating or inverting that map.  (The classical shortcut equating the
budget with the plain l1 norm of x, and gamma with the sup-norm residual,
holds only for unweighted problems of a different form and is not used
here.)
"""

from __future__ import annotations

from .core import DualInstance, Instance, SolutionPath, replay_states, segment_coefficients

__all__ = ["to_dual", "from_dual", "weighted_tv", "tv_budget_of",
           "gamma_for_budget"]


def to_dual(inst: Instance) -> DualInstance:
    """Chain-problem data for a fitting instance."""
    n = inst.n
    backend = inst.backend
    zero = backend.scalar(0)
    targets = [zero] * (n + 1)
    acc = zero
    for i in range(n - 1, -1, -1):
        acc = acc - inst.y[i]
        targets[i] = acc
    weights = [zero] + list(inst.alpha) + [zero]
    return DualInstance(tuple(targets), tuple(weights), backend)


def from_dual(dual: DualInstance) -> Instance:
    """Inverse of :func:`to_dual`; exact on the rational backend."""
    t = dual.targets
    y = tuple(t[i + 1] - t[i] for i in range(dual.n))
    alpha = tuple(dual.weights[1:dual.n])
    return Instance(y, alpha, dual.backend)


def weighted_tv(inst: Instance, x) -> object:
    """Weighted total variation ``sum(alpha_t * |x_{t+1} - x_t|)``."""
    if len(x) != inst.n:
        raise ValueError(f"expected {inst.n} values, got {len(x)}")
    total = inst.backend.scalar(0)
    for t in range(inst.n - 1):
        total = total + inst.alpha[t] * abs(x[t + 1] - x[t])
    return total


def tv_budget_of(path: SolutionPath, gamma):
    """Weighted TV of the path solution at ``gamma`` -- the budget whose
    constrained problem has the same solution."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    inst = from_dual(path.dual)
    return weighted_tv(inst, path.solution_at(gamma))


def _edge_terms(dual: DualInstance, coeffs):
    """Per edge t: (alpha_t, a, b) with x_{t+1}(g) - x_t(g) = a + b*g."""
    out = []
    for t in range(1, dual.n):
        a = coeffs[t + 1][0] - 2 * coeffs[t][0] + coeffs[t - 1][0]
        b = coeffs[t + 1][1] - 2 * coeffs[t][1] + coeffs[t - 1][1]
        out.append((dual.weights[t], a, b))
    return out


def _tv_linear(terms, gamma):
    total = 0
    for alpha, a, b in terms:
        total = total + alpha * abs(a + b * gamma)
    return total


def gamma_for_budget(path: SolutionPath, budget):
    """Smallest gamma whose path solution satisfies the TV budget.

    Inverts the non-increasing piecewise-linear map gamma -> weighted TV
    of x(gamma) exactly over the path segments, splitting each segment at
    the sign changes of individual edge differences.  Returns 0 when the
    unpenalized solution already fits the budget; on flat stretches of
    the map the smallest gamma is returned.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    events = path.events
    # float evaluations of the TV map carry roundoff dust, in particular
    # the terminal value is ~eps instead of exactly 0
    slack = None
    k = 0
    for state in replay_states(path.dual, path.initial_signs, events):
        lo = 0 if k == 0 else events[k - 1].gamma
        hi = events[k].gamma if k < len(events) else None
        k += 1
        if hi is not None and hi == lo:
            continue
        coeffs = segment_coefficients(path.dual, state)
        terms = _edge_terms(path.dual, coeffs)
        if slack is None:
            base = _tv_linear(terms, lo)
            slack = 0 if path.backend.exact else 1e-12 * max(1.0, abs(float(base)))
        if _tv_linear(terms, lo) <= budget + slack:
            return lo
        if hi is not None and _tv_linear(terms, hi) > budget + slack:
            continue
        # budget is crossed inside [lo, hi); split at edge sign changes
        cuts = [lo]
        for alpha, a, b in terms:
            root = path.backend.crossing(-a, b)
            if root is not None and lo < root and (hi is None or root < hi):
                cuts.append(root)
        cuts = sorted(set(cuts))
        if hi is not None:
            cuts.append(hi)
        for idx in range(len(cuts)):
            g0 = cuts[idx]
            tv0 = _tv_linear(terms, g0)
            if tv0 <= budget + slack:
                return g0
            g1 = cuts[idx + 1] if idx + 1 < len(cuts) else None
            if g1 is None:
                # affine tail: tv0 + slope*(g - g0) with slope < 0
                slope = _tv_linear(terms, g0 + 1) - tv0
                step = path.backend.crossing(budget - tv0, slope)
                if step is None or step < 0:
                    break
                return g0 + step
            tv1 = _tv_linear(terms, g1)
            if tv1 <= budget + slack:
                slope = (tv1 - tv0) / (g1 - g0)
                if slope == 0:
                    return g1
                gamma = g0 + (budget - tv0) / slope
                return min(max(gamma, g0), g1)
    raise AssertionError("TV map inversion fell through")
