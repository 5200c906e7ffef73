"""First-order solvers that record extrapolated companion iterates.

Each solver walks a geometric checkpoint schedule (powers of two plus their
midpoints) and stores the iterate, for averaged gradient descent also the
running average, and at even checkpoints whose half is itself a checkpoint
the first-order extrapolation 2 x_k - x_{k/2}.  For averaged descent that
combination of running averages equals the mean of iterates k/2..k-1, so the
two-point rule turns full averaging into tail averaging without storing any
history.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .extrapolation import combine, richardson_weights

__all__ = [
    "Checkpoint",
    "DivergenceError",
    "INV_K",
    "SolverTrace",
    "StepRule",
    "TWO_OVER_K_PLUS_ONE",
    "accelerated_gd",
    "averaged_gd",
    "constant_step",
    "frank_wolfe",
    "geometric_checkpoints",
]

_FIRST_ORDER = richardson_weights(1)  # (2, -1)


class DivergenceError(RuntimeError):
    """An iterate stopped being finite."""


@dataclass
class Checkpoint:
    """Solver state recorded after k completed iterations."""

    k: int
    x: np.ndarray
    f_x: float
    x_avg: np.ndarray | None = None
    f_avg: float | None = None
    x_extrap: np.ndarray | None = None
    f_extrap: float | None = None


@dataclass
class SolverTrace:
    """Checkpoints of one solver run, in strictly increasing k."""

    solver: str
    checkpoints: list[Checkpoint] = field(default_factory=list)

    def append(self, cp: Checkpoint) -> None:
        if self.checkpoints and cp.k <= self.checkpoints[-1].k:
            raise ValueError("checkpoints must arrive in increasing k")
        self.checkpoints.append(cp)

    def ks(self) -> np.ndarray:
        return np.array([cp.k for cp in self.checkpoints], dtype=int)

    def final(self) -> Checkpoint:
        if not self.checkpoints:
            raise ValueError("empty trace")
        return self.checkpoints[-1]

    def iterates(self) -> dict[int, np.ndarray]:
        return {cp.k: cp.x for cp in self.checkpoints}

    def gaps(self, f_star: float, series: str = "plain"):
        """(k, f - f_star) arrays for one series, skipping undefined cells.

        series is one of "plain", "avg", "extrap".
        """
        attr = {"plain": "f_x", "avg": "f_avg", "extrap": "f_extrap"}[series]
        ks, gaps = [], []
        for cp in self.checkpoints:
            f = getattr(cp, attr)
            if f is not None:
                ks.append(cp.k)
                gaps.append(f - f_star)
        return np.array(ks, dtype=float), np.array(gaps, dtype=float)

    def csv_rows(self, f_star: float):
        """Rows (k, gap_plain, gap_avg, gap_extrap), '' where undefined."""
        for cp in self.checkpoints:
            yield (
                cp.k,
                cp.f_x - f_star,
                "" if cp.f_avg is None else cp.f_avg - f_star,
                "" if cp.f_extrap is None else cp.f_extrap - f_star,
            )


def geometric_checkpoints(n_iters: int) -> list[int]:
    """Powers of two and their midpoints up to n_iters, plus n_iters itself.

    The set is closed under halving of its even members, so every even
    checkpoint k pairs with a recorded k/2.
    """
    if n_iters < 1:
        raise ValueError("need at least one iteration")
    ks = {1, n_iters}
    p = 2
    while p <= n_iters:
        ks.add(p)
        if 3 * p // 2 <= n_iters:
            ks.add(3 * p // 2)
        p *= 2
    return sorted(ks)


def _check_finite(x: np.ndarray, k: int, solver: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DivergenceError(
            f"{solver}: iterate became non-finite by iteration {k} "
            f"(max |x| = {np.abs(x[np.isfinite(x)]).max() if np.any(np.isfinite(x)) else np.inf:.3g})"
        )


def averaged_gd(
    objective,
    x0,
    gamma: float,
    n_iters: int,
    grad_noise_std: float = 0.0,
    seed: int = 0,
    checkpoints=None,
) -> SolverTrace:
    """Gradient descent with running averaging and tail-average checkpoints.

    x_{k+1} = x_k - gamma (f'(x_k) + xi_k), with optional isotropic Gaussian
    gradient noise xi_k.  Records the running average
    avg_k = (1/k) sum_{i<k} x_i and, at even checkpoints, the tail average
    2 avg_k - avg_{k/2}.

    Args:
        objective: Objective with value/gradient.
        x0: start point.
        gamma: step size; a warning is issued above 1/L when L is known.
        n_iters: total iterations, >= 2.
        grad_noise_std: std of the additive gradient noise (0 = none).
        seed: noise seed; unused when noise is off.
        checkpoints: iteration indices to record; geometric by default.
    """
    if n_iters < 2:
        raise ValueError("need at least two iterations")
    if gamma <= 0:
        raise ValueError("step size must be positive")
    L = objective.smoothness
    if L is not None and gamma > 1.0 / L * (1 + 1e-12):
        warnings.warn(
            f"step {gamma:.4g} exceeds 1/L = {1.0 / L:.4g}; "
            "plain gradient descent may diverge",
            stacklevel=2,
        )
    marks = set(checkpoints if checkpoints is not None
                else geometric_checkpoints(n_iters))
    rng = np.random.default_rng(seed) if grad_noise_std > 0 else None
    x = np.array(x0, dtype=float)
    run_sum = np.zeros_like(x)
    averages: dict[int, np.ndarray] = {}
    trace = SolverTrace(solver="averaged-gd")
    for k in range(1, n_iters + 1):
        run_sum += x
        g = objective.gradient(x)
        if rng is not None:
            g = g + rng.normal(0.0, grad_noise_std, size=x.shape)
        x = x - gamma * g
        if k in marks:
            _check_finite(x, k, "averaged-gd")
            avg = run_sum / k
            averages[k] = avg
            cp = Checkpoint(
                k=k,
                x=x.copy(),
                f_x=objective.value(x),
                x_avg=avg,
                f_avg=objective.value(avg),
            )
            if k % 2 == 0 and k // 2 in averages:
                tail = combine(_FIRST_ORDER, [avg, averages[k // 2]])
                cp.x_extrap = tail
                cp.f_extrap = objective.value(tail)
            trace.append(cp)
    return trace


def accelerated_gd(
    objective,
    x0,
    n_iters: int,
    L: float | None = None,
    checkpoints=None,
) -> SolverTrace:
    """Nesterov's method for convex smooth functions.

    Step 1/L at the extrapolated point, momentum (k-1)/(k+2):

        x_k = y_{k-1} - (1/L) f'(y_{k-1})
        y_k = x_k + ((k-1)/(k+2)) (x_k - x_{k-1})

    Records the iterate and, at even checkpoints, 2 x_k - x_{k/2}.
    """
    if n_iters < 2:
        raise ValueError("need at least two iterations")
    if L is None:
        L = objective.smoothness
    if L is None or L <= 0:
        raise ValueError("need a positive smoothness bound L")
    marks = set(checkpoints if checkpoints is not None
                else geometric_checkpoints(n_iters))
    step = 1.0 / L
    x_prev = np.array(x0, dtype=float)
    y = x_prev.copy()
    iterates: dict[int, np.ndarray] = {}
    trace = SolverTrace(solver="accelerated-gd")
    for k in range(1, n_iters + 1):
        x = y - step * objective.gradient(y)
        y = x + ((k - 1.0) / (k + 2.0)) * (x - x_prev)
        x_prev = x
        if k in marks:
            _check_finite(x, k, "accelerated-gd")
            iterates[k] = x
            cp = Checkpoint(k=k, x=x.copy(), f_x=objective.value(x))
            if k % 2 == 0 and k // 2 in iterates:
                ex = combine(_FIRST_ORDER, [x, iterates[k // 2]])
                cp.x_extrap = ex
                cp.f_extrap = objective.value(ex)
            trace.append(cp)
    return trace


@dataclass(frozen=True)
class StepRule:
    """Step size schedule rho(k) for Frank-Wolfe, k counted from 1."""

    kind: str  # "constant" | "inv-k" | "two-over-k-plus-one"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "inv-k", "two-over-k-plus-one"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.kind == "constant":
            if self.gamma is None or not 0 < self.gamma <= 1:
                raise ValueError("constant step needs gamma in (0, 1]")

    def rho(self, k: int) -> float:
        if self.kind == "constant":
            return self.gamma
        if self.kind == "inv-k":
            return 1.0 / k
        return 2.0 / (k + 1.0)

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant({self.gamma:g})"
        return "1/k" if self.kind == "inv-k" else "2/(k+1)"


INV_K = StepRule("inv-k")
TWO_OVER_K_PLUS_ONE = StepRule("two-over-k-plus-one")


def constant_step(gamma: float) -> StepRule:
    return StepRule("constant", gamma)


def frank_wolfe(
    objective,
    oracle,
    rule: StepRule,
    n_iters: int,
    x0=None,
    checkpoints=None,
) -> SolverTrace:
    """Frank-Wolfe with an open-loop (or constant) step schedule.

    x_k = (1 - rho_k) x_{k-1} + rho_k v_k with v_k the oracle vertex for the
    current gradient.  Iteration counting starts at k = 1, so rho_1 = 1 under
    both open-loop rules and x_1 is a vertex regardless of x0.  At even
    checkpoints the extrapolation 2 x_k - x_{k/2} is pulled back into the
    feasible set (rescaling toward the origin, or clipping for the box)
    before its objective value is recorded.
    """
    if n_iters < 2:
        raise ValueError("need at least two iterations")
    x = (oracle.default_start(objective.dim) if x0 is None
         else np.array(x0, dtype=float))
    if not oracle.contains(x, tol=1e-12):
        raise ValueError("start point is infeasible")
    marks = set(checkpoints if checkpoints is not None
                else geometric_checkpoints(n_iters))
    iterates: dict[int, np.ndarray] = {}
    trace = SolverTrace(solver=f"frank-wolfe[{rule.label()}]")
    for k in range(1, n_iters + 1):
        v = oracle.lmo(objective.gradient(x))
        rho = rule.rho(k)
        x = (1.0 - rho) * x + rho * v
        if k in marks:
            _check_finite(x, k, "frank-wolfe")
            iterates[k] = x
            cp = Checkpoint(k=k, x=x.copy(), f_x=objective.value(x))
            if k % 2 == 0 and k // 2 in iterates:
                raw = combine(_FIRST_ORDER, [x, iterates[k // 2]])
                ex = oracle.make_feasible(raw)
                cp.x_extrap = ex
                cp.f_extrap = objective.value(ex)
            trace.append(cp)
    return trace
