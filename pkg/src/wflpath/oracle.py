"""Independent fixed-gamma solvers and brute-force path probes.

Two direct solvers are kept deliberately separate from the path solver
and from each other, so that a bug in any one of the three shows up as a
disagreement:

* :func:`solve_fixed_gamma_dp` runs forward dynamic programming on the
  fitting problem, carrying the derivative of the partial objective as a
  monotone piecewise-linear function.
* :func:`solve_fixed_gamma_qp` solves the box-constrained chain problem
  with a primal active-set method.

Both are exact on the rational backend.  The grid probes
(:func:`sweep_segment_count`, :func:`fused_interval_scan`) sample one of
the solvers over a gamma grid; they are documented lower-bound /
approximate estimators.
"""

from __future__ import annotations

from .core import DualInstance, Instance

__all__ = [
    "OracleError", "solve_fixed_gamma_dp", "solve_fixed_gamma_qp",
    "sweep_segment_count", "fused_interval_scan", "subgradient_violation",
]


class OracleError(RuntimeError):
    """An oracle failed to terminate; indicates a bug or float breakdown."""


# ---------------------------------------------------------------------------
# dynamic programming on the fitting problem


class _Derivative:
    """Monotone piecewise-linear derivative of a convex partial objective.

    Knots are (position, value) pairs with linear interpolation between
    them; the tails extend with ``left_slope`` / ``right_slope``.  Interior
    piece slopes stay >= 1, so interpolation never divides by zero.
    """

    __slots__ = ("knots", "left_slope", "right_slope", "exact")

    def __init__(self, z0, v0, exact=True):
        self.knots = [(z0, v0)]
        self.left_slope = 1
        self.right_slope = 1
        self.exact = exact

    def _locate(self, level):
        """Position z with f(z) == level (f is monotone nondecreasing)."""
        knots = self.knots
        z0, v0 = knots[0]
        if level <= v0:
            return z0 - (v0 - level) / self.left_slope
        for k in range(1, len(knots)):
            z1, v1 = knots[k]
            if level <= v1:
                if v1 == v0:
                    return z1
                return z0 + (z1 - z0) * (level - v0) / (v1 - v0)
            z0, v0 = z1, v1
        return z0 + (level - v0) / self.right_slope

    def clip(self, cap):
        """Truncate the derivative to [-cap, +cap]; returns the positions
        where each level is attained (the backtracking interval)."""
        z_lo = self._locate(-cap)
        z_hi = self._locate(cap)
        if self.exact:
            pad_lo = pad_hi = 0
        else:
            # snap float knots that collapse onto the clip positions
            pad_lo = 1e-13 * max(1.0, abs(z_lo))
            pad_hi = 1e-13 * max(1.0, abs(z_hi))
        inner = [(z, v) for z, v in self.knots
                 if z_lo + pad_lo < z < z_hi - pad_hi and -cap < v < cap]
        if cap == 0:
            self.knots = [(z_lo, 0 * cap)]
        else:
            self.knots = [(z_lo, -cap)] + inner + [(z_hi, cap)]
        self.left_slope = 0
        self.right_slope = 0
        return z_lo, z_hi

    def add_residual(self, y_t):
        """Add the derivative (z - y_t) of a new squared-loss term."""
        self.knots = [(z, v + z - y_t) for z, v in self.knots]
        self.left_slope += 1
        self.right_slope += 1

    def root(self):
        return self._locate(0)


def solve_fixed_gamma_dp(inst: Instance, gamma) -> list:
    """Minimizer of the fitting problem at a fixed gamma, by forward DP.

    Exact on the rational backend.  Cost O(n^2) worst case from knot-list
    copying; in practice close to linear because clipping discards knots.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    n = inst.n
    y = inst.y
    if n == 1:
        return [y[0]]
    deriv = _Derivative(y[0], 0 * y[0], exact=inst.backend.exact)
    clamps = []
    for t in range(1, n):
        clamps.append(deriv.clip(gamma * inst.alpha[t - 1]))
        deriv.add_residual(y[t])
    x = [None] * n
    x[n - 1] = deriv.root()
    for t in range(n - 2, -1, -1):
        lo, hi = clamps[t]
        x[t] = min(max(x[t + 1], lo), hi)
    return x


def subgradient_violation(inst: Instance, x, gamma):
    """Worst violation of the stationarity certificate of a claimed
    minimizer: each prefix residual sum must lie in [-gamma*alpha_t,
    +gamma*alpha_t], hitting the bound whose sign matches x_{t+1} - x_t
    whenever that difference is nonzero, and the full residual sum must
    vanish.  Returns 0 for an exact optimum."""
    worst = 0 * inst.y[0]
    cum = 0 * inst.y[0]
    for t in range(inst.n):
        cum = cum + x[t] - inst.y[t]
        if t == inst.n - 1:
            worst = max(worst, abs(cum))
            break
        bound = gamma * inst.alpha[t]
        worst = max(worst, abs(cum) - bound)
        if x[t + 1] > x[t]:
            worst = max(worst, abs(cum - bound))
        elif x[t + 1] < x[t]:
            worst = max(worst, abs(cum + bound))
    return max(worst, 0 * worst)


# ---------------------------------------------------------------------------
# active set on the chain problem


def _solve_free_runs(w, active_side, lo, hi):
    """Equality-constrained minimizer of sum((w_{i+1}-w_i)^2): pinned
    points sit on their bound, each maximal free run solves its
    tridiagonal system by the Thomas algorithm."""
    m = len(w)
    trial = list(w)
    for i in range(m):
        side = active_side[i]
        if side is not None:
            trial[i] = hi[i] if side > 0 else lo[i]
    i = 0
    while i < m:
        if active_side[i] is not None:
            i += 1
            continue
        j = i
        while active_side[j] is None:
            j += 1
        # free run i..j-1 anchored at trial[i-1], trial[j]
        size = j - i
        rhs = [0 * w[0]] * size
        rhs[0] = rhs[0] + trial[i - 1]
        rhs[-1] = rhs[-1] + trial[j]
        cp = [None] * size
        dp = [None] * size
        cp[0] = _ratio_like(rhs[0], -1, 2)
        dp[0] = rhs[0] / 2
        for k in range(1, size):
            denom = 2 + cp[k - 1]
            cp[k] = -1 / denom
            dp[k] = (rhs[k] + dp[k - 1]) / denom
        trial[j - 1] = dp[size - 1]
        for k in range(size - 2, -1, -1):
            trial[i + k] = dp[k] - cp[k] * trial[i + k + 1]
        i = j
    return trial


def _ratio_like(template, p, q):
    """p/q in the same field as ``template``."""
    return (p + 0 * template) / q


def solve_fixed_gamma_qp(dual: DualInstance, gamma, max_iter: int | None = None) -> list:
    """Chain-problem minimizer at a fixed gamma via a primal active set.

    Starts from the straight line between the endpoints clamped into the
    boxes, then alternates equality solves with adding the blocking bound
    along the step direction, or dropping the smallest-index active bound
    whose multiplier has the wrong sign.  Exact on the rational backend.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    m = dual.npoints
    targets, weights = dual.targets, dual.weights
    lo = [targets[i] - gamma * weights[i] for i in range(m)]
    hi = [targets[i] + gamma * weights[i] for i in range(m)]
    exact = dual.backend.exact
    feas_tol = 0 if exact else 1e-13 * max(1.0, max(abs(float(t)) for t in targets))

    span = m - 1
    w = []
    active_side: list = [None] * m
    for i in range(m):
        pos = targets[0] + (targets[-1] - targets[0]) * dual.backend.ratio(i, span)
        if lo[i] == hi[i]:
            w.append(lo[i])
            active_side[i] = 1
        elif pos >= hi[i]:
            w.append(hi[i])
            active_side[i] = 1
        elif pos <= lo[i]:
            w.append(lo[i])
            active_side[i] = -1
        else:
            w.append(pos)

    if max_iter is None:
        max_iter = 10 * m * m + 100
    for _ in range(max_iter):
        trial = _solve_free_runs(w, active_side, lo, hi)
        # largest feasible step toward the trial point
        sigma = None
        blocker = None
        block_side = 0
        for i in range(1, m - 1):
            if active_side[i] is not None:
                continue
            d = trial[i] - w[i]
            if d > 0 and trial[i] > hi[i] + feas_tol:
                s = (hi[i] - w[i]) / d
                side = 1
            elif d < 0 and trial[i] < lo[i] - feas_tol:
                s = (lo[i] - w[i]) / d
                side = -1
            else:
                continue
            if sigma is None or s < sigma:
                sigma, blocker, block_side = s, i, side
        if blocker is not None:
            for i in range(1, m - 1):
                if active_side[i] is None:
                    w[i] = w[i] + sigma * (trial[i] - w[i])
            w[blocker] = hi[blocker] if block_side > 0 else lo[blocker]
            active_side[blocker] = block_side
            continue
        w = trial
        # KKT: an active bound must be pulled against, not away
        drop_tol = 0 if exact else -feas_tol
        drop = None
        for i in range(1, m - 1):
            side = active_side[i]
            if side is None or lo[i] == hi[i]:
                continue
            pull = w[i - 1] + w[i + 1] - 2 * w[i]
            if side * pull < drop_tol:
                drop = i
                break
        if drop is None:
            return w
        active_side[drop] = None
    raise OracleError("active-set solver exceeded its iteration budget")


# ---------------------------------------------------------------------------
# grid probes


def _solution_sampler(inst: Instance, solver=None):
    cache = {}
    if solver is None:
        solver = solve_fixed_gamma_dp

    def sample(gamma):
        if gamma not in cache:
            cache[gamma] = solver(inst, gamma)
        return cache[gamma]

    return sample


def sweep_segment_count(inst: Instance, gamma_max, grid: int = 64,
                        rtol: float = 1e-7, max_depth: int = 48) -> int:
    """Number of distinct linear segments of x(gamma) on [0, gamma_max],
    estimated from fixed-gamma solves alone.

    Adaptive slope-change detection: a cell whose two half-cell secant
    slopes agree (exactly on the rational backend, to relative ``rtol``
    on floats) counts one segment, otherwise it splits, and the halves
    merge only when the solution is linear across the split point --
    tested on a shrinking neighborhood so a breakpoint sitting exactly on
    an evaluation node is still seen.  Breakpoints closer than the final
    resolution can merge, so this is a lower-bound estimator.
    """
    if grid < 3:
        raise ValueError("grid must be >= 3")
    sample = _solution_sampler(inst)
    exact = inst.backend.exact
    half = inst.backend.ratio(1, 2)
    gamma_max = inst.backend.scalar(gamma_max)
    cells = grid - 1
    knots = [gamma_max * inst.backend.ratio(k, cells) for k in range(cells + 1)]
    depth = max(4, max_depth - cells.bit_length())
    # below this width float secant noise would drown the slope test
    width_floor = None if exact else float(knots[1] - knots[0]) / (1 << 16)
    join_budget = 96 if exact else 20

    def straight(ga, gm, gb) -> bool:
        """Secant slopes of [ga,gm] and [gm,gb] agree for every coord."""
        xa, xm, xb = sample(ga), sample(gm), sample(gb)
        dl, dr = gm - ga, gb - gm
        for a, m_, b in zip(xa, xm, xb):
            sl = (m_ - a) / dl
            sr = (b - m_) / dr
            if exact:
                if sl != sr:
                    return False
            elif abs(sl - sr) > rtol * max(1.0, abs(sl), abs(sr)):
                return False
        return True

    def joins(g, width) -> bool:
        """Whether the pieces left and right of g form one line at g,
        shrinking the probe width to step over nearby breakpoints."""
        delta = width * half * half
        for _ in range(join_budget):
            if width_floor is not None and delta < width_floor:
                break
            if straight(g - delta, g, g + delta):
                return True
            delta = delta * half
        return False

    def one_kink(ga, gb):
        """Try to explain a non-straight cell by a single slope change:
        extrapolate the linear pieces at both ends, locate their crossing,
        and verify the solution sits on the end pieces on either side of
        it.  Returns True when the cell holds exactly two segments."""
        w = gb - ga
        h = w * inst.backend.ratio(1, 64)
        if width_floor is not None and float(h) < 4 * width_floor:
            h = w * half * half
        xa, xa2 = sample(ga), sample(ga + h)
        xb2, xb = sample(gb - h), sample(gb)
        lo = hi = None
        for a, a2, b2, b in zip(xa, xa2, xb2, xb):
            sa = (a2 - a) / h
            sb = (b - b2) / h
            gap = sb - sa
            if exact:
                if gap == 0:
                    continue
            elif abs(gap) <= rtol * max(1.0, abs(sa), abs(sb)):
                continue
            cross = (a - sa * ga - b + sb * gb) / gap
            lo = cross if lo is None or cross < lo else lo
            hi = cross if hi is None or cross > hi else hi
        if lo is None or hi - lo > w * inst.backend.ratio(1, 8):
            return False
        if not (ga < lo and hi < gb):
            return False
        if lo - ga < 3 * h or gb - hi < 3 * h:
            # slope change hugging a cell edge: trust the end pieces
            return True
        sides = (((ga + lo) * half, xa, ga, xa2, h),
                 ((hi + gb) * half, xb, gb, xb2, -h))
        for q, ref, g0, probe, dh in sides:
            xq = sample(q)
            for r, o, v in zip(ref, probe, xq):
                s = (o - r) / dh
                expect = r + s * (q - g0)
                if exact:
                    if v != expect:
                        return False
                elif abs(v - expect) > 64 * rtol * max(1.0, abs(v), abs(expect)):
                    return False
        return True

    def cell_count(ga, gb, depth):
        gm = (ga + gb) * half
        if straight(ga, gm, gb):
            return 1
        if one_kink(ga, gb):
            return 2
        if depth <= 0 or (width_floor is not None and gb - ga < 8 * width_floor):
            return 2
        shared = 1 if joins(gm, gb - ga) else 0
        return (cell_count(ga, gm, depth - 1)
                + cell_count(gm, gb, depth - 1) - shared)

    total = 0
    for k in range(cells):
        total += cell_count(knots[k], knots[k + 1], depth)
    # merge segments shared across interior grid knots
    for k in range(1, cells):
        if joins(knots[k], knots[k + 1] - knots[k]):
            total -= 1
    return total


def fused_interval_scan(inst: Instance, pair: int, gamma_max, grid: int = 256,
                        tol: float = 1e-9, refine_iters: int = 60) -> list:
    """Maximal gamma-intervals in [0, gamma_max] where the solution pair
    (x_pair, x_{pair+1}) coincides to within ``tol`` (pair is 1-based).

    Grid scan of fixed-gamma solves with bisection refinement of the
    interval edges; endpoints are approximate to the bisection resolution.
    """
    if not 1 <= pair <= inst.n - 1:
        raise ValueError(f"pair must be in 1..{inst.n - 1}")
    sample = _solution_sampler(inst)
    gamma_max = inst.backend.scalar(gamma_max)
    half = inst.backend.ratio(1, 2)

    def fused(gamma) -> bool:
        x = sample(gamma)
        return abs(x[pair] - x[pair - 1]) <= tol

    def edge(g_out, g_in):
        """Refine the transition between an unfused and a fused gamma."""
        for _ in range(refine_iters):
            mid = (g_out + g_in) * half
            if fused(mid):
                g_in = mid
            else:
                g_out = mid
            if not inst.backend.exact and g_in == g_out:
                break
        return (g_out + g_in) * half

    cells = grid - 1
    knots = [gamma_max * inst.backend.ratio(k, cells) for k in range(cells + 1)]
    flags = [fused(g) for g in knots]
    intervals = []
    start = None
    for k, g in enumerate(knots):
        if flags[k] and start is None:
            start = g if k == 0 else edge(knots[k - 1], g)
        elif not flags[k] and start is not None:
            intervals.append((start, edge(g, knots[k - 1])))
            start = None
    if start is not None:
        intervals.append((start, gamma_max))
    return intervals
