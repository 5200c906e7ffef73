"""Richardson extrapolation weights and the ridge spectral filter.

The order-m combination of estimates x(lam), x(2 lam), ..., x((m+1) lam) with
weights alpha_i = (-1)^(i-1) * C(m+1, i) kills the first m Taylor terms of the
bias in the scale parameter.  The weights are exact integers; constraint
residuals can therefore be checked in integer arithmetic.  Applied to the
eigenvalues of a ridge smoother the same combination collapses to the scalar
filter ``1 - (m+1)! / ((mu+1)(mu+2)...(mu+m+1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "MAX_ORDER",
    "RichardsonWeights",
    "ScaleConvention",
    "combine",
    "iteration_halving_pair",
    "richardson_weights",
    "spectral_filter",
    "spectral_filter_direct",
    "validate_convention",
]

# Orders beyond this make the binomial weights (and the cancellation they
# rely on) numerically useless in float64, so they are rejected outright.
MAX_ORDER = 20


class ScaleConvention(Enum):
    """How the combined estimates are indexed against a scale parameter.

    ``REGULARIZATION_SCALES`` refers to estimates taken at lam, 2*lam, ...,
    (m+1)*lam.  ``ITERATION_HALVING`` refers to the pair (x_k, x_{k/2}) and
    only exists at order one.
    """

    REGULARIZATION_SCALES = "regularization-scales"
    ITERATION_HALVING = "iteration-halving"


def validate_convention(convention: ScaleConvention, m: int) -> None:
    """Reject conventions that do not exist at the requested order."""
    if convention is ScaleConvention.ITERATION_HALVING and m != 1:
        raise ValueError(
            "iteration halving only defines a first-order rule; "
            f"got order m={m}"
        )


@dataclass(frozen=True)
class RichardsonWeights:
    """Signed integer coefficients alpha_1..alpha_{m+1} of an order-m rule."""

    order: int
    weights: tuple[int, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    def constraint_residuals(self) -> list[int]:
        """Exact integer residuals of the defining constraints.

        Entry 0 is sum(alpha_i) - 1; entry j for j = 1..m is
        sum(alpha_i * i^j).  Every entry must be exactly zero.  Python
        integers keep the arithmetic exact even where i^j overflows int64.
        """
        residuals = [sum(self.weights) - 1]
        for j in range(1, self.order + 1):
            residuals.append(
                sum(a * i**j for i, a in enumerate(self.weights, start=1))
            )
        return residuals


def richardson_weights(m: int) -> RichardsonWeights:
    """Order-m extrapolation weights alpha_i = (-1)^(i-1) * C(m+1, i).

    These are the unique solution of sum_i alpha_i = 1 and
    sum_i alpha_i * i^j = 0 for j = 1..m.  Order 1 gives (2, -1), the
    familiar ``2 x(lam) - x(2 lam)``.

    Args:
        m: extrapolation order, 0 <= m <= MAX_ORDER.

    Returns:
        RichardsonWeights with exact integer coefficients.
    """
    if not isinstance(m, (int, np.integer)):
        raise TypeError(f"order must be an integer, got {type(m).__name__}")
    if m < 0:
        raise ValueError(f"order must be non-negative, got {m}")
    if m > MAX_ORDER:
        raise ValueError(
            f"order {m} exceeds the supported maximum {MAX_ORDER}"
        )
    weights = tuple(
        (-1) ** (i - 1) * math.comb(m + 1, i) for i in range(1, m + 2)
    )
    return RichardsonWeights(order=int(m), weights=weights)


def combine(weights: RichardsonWeights, estimates) -> np.ndarray:
    """Weighted combination sum_i alpha_i * estimates[i-1].

    ``estimates[i-1]`` is the estimate at the i-th scale (the solution at
    i*lam, or the pair x_k, x_{k/2} under iteration halving at order one).

    Args:
        weights: coefficients from :func:`richardson_weights`.
        estimates: sequence of m+1 arrays of one common shape (scalars work).

    Returns:
        The combined estimate, same shape as the inputs.
    """
    if len(estimates) != weights.order + 1:
        raise ValueError(
            f"order {weights.order} needs {weights.order + 1} estimates, "
            f"got {len(estimates)}"
        )
    arrays = [np.asarray(e, dtype=float) for e in estimates]
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise ValueError(
                f"estimates must share one shape; got {shape} and {a.shape}"
            )
    out = np.zeros(shape)
    for alpha, a in zip(weights.weights, arrays):
        out += alpha * a
    return out


def iteration_halving_pair(k: int) -> tuple[int, int]:
    """Checkpoint pair (k, k/2) for first-order iterate extrapolation.

    Odd k is rejected: the rule is only defined where k/2 is an iterate
    index, and interpolating between iterates would change the estimator.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 to halve, got {k}")
    if k % 2:
        raise ValueError(f"iteration halving needs an even k, got {k}")
    return k, k // 2


def _log_filter_complement(mu: np.ndarray, m: int) -> np.ndarray:
    # log of prod_j j/(mu+j) over j = 1..m+1, i.e. log(1 - s(mu)), as
    # -sum_j log1p(mu/j); summing logs never overflows and keeps full
    # relative precision at both ends of the mu range.
    out = np.zeros_like(mu)
    for j in range(1, m + 2):
        out -= np.log1p(mu / j)
    return out


def spectral_filter(mu, m: int):
    """Eigenvalue filter of the order-m extrapolated ridge smoother.

    s(mu) = 1 - (m+1)! / ((mu+1)(mu+2)...(mu+m+1)).  Maps [0, inf) into
    [0, 1), is zero at zero, increases in mu, and increases with the order
    m.  Evaluated as -expm1(-sum_j log1p(mu/j)) so the result keeps
    relative accuracy where s is tiny; the naive product form loses five
    or six digits near zero to the final subtraction from one.  At the
    other end the complement can drop below one ulp (large mu and m), and
    the returned double rounds to exactly 1.0.

    Args:
        mu: non-negative scalar or array (kernel eigenvalue over n*lam).
        m: extrapolation order, 0 <= m <= MAX_ORDER.

    Returns:
        Filter value(s), scalar for scalar input.
    """
    if m < 0 or m > MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}], got {m}")
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0):
        raise ValueError("mu must be non-negative")
    out = -np.expm1(_log_filter_complement(mu_arr, m))
    if mu_arr.ndim == 0:
        return float(out)
    return out


def spectral_filter_direct(mu, m: int):
    """The same filter as the explicit weight sum sum_i alpha_i * mu/(mu+i).

    This is the order-m combination of the plain ridge factors mu/(mu+i)
    written out term by term; it agrees with :func:`spectral_filter` up to
    rounding and exists mostly to cross-check that closed form.
    """
    w = richardson_weights(m)
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0):
        raise ValueError("mu must be non-negative")
    out = np.zeros_like(mu_arr)
    for i, alpha in enumerate(w.weights, start=1):
        out += alpha * (mu_arr / (mu_arr + i))
    if mu_arr.ndim == 0:
        return float(out)
    return out
