"""Objectives, seeded instance generators, and linear minimization oracles.

Instances mirror the experimental setups the solvers are measured on:
logistic regression with a decaying covariance spectrum, a diagonal quadratic
with known optimum, the box-constrained dual of absolute-loss regression, and
least squares for the penalized Lasso.  All generators take an explicit seed
and are deterministic given it.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

__all__ = [
    "BoxOracle",
    "L1BallOracle",
    "LeastSquaresProblem",
    "LogisticProblem",
    "Objective",
    "QuadraticProblem",
    "RobustDualProblem",
    "gen_fw_lasso",
    "gen_logistic",
    "gen_penalized_lasso",
    "gen_robust_dual",
    "l1_ball_projection",
    "lmo",
    "load_dataset",
    "save_dataset",
]


class Objective:
    """A differentiable function on R^d.

    Subclasses set ``dim`` and implement ``value`` and ``gradient``;
    ``smoothness`` is an upper bound on the Hessian spectral norm when one is
    available, else None.
    """

    dim: int
    smoothness: float | None = None

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        return self.value(x), self.gradient(x)


class LogisticProblem(Objective):
    """Average logistic loss (1/n) sum_i log(1 + exp(-b_i a_i.x))."""

    def __init__(self, features, labels):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be one per feature row")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must lie in {-1, +1}")
        self.features = features
        self.labels = labels
        self.n, self.dim = features.shape
        self._smoothness: float | None = None

    @property
    def smoothness(self) -> float:
        # sigma'(t) <= 1/4, so the Hessian is dominated by A^T A / (4n).
        if self._smoothness is None:
            gram = self.features.T @ self.features
            self._smoothness = float(np.linalg.eigvalsh(gram)[-1]) / (
                4.0 * self.n
            )
        return self._smoothness

    def margins(self, x) -> np.ndarray:
        return self.labels * (self.features @ x)

    def value(self, x) -> float:
        return float(np.mean(np.logaddexp(0.0, -self.margins(x))))

    def gradient(self, x) -> np.ndarray:
        weights = expit(-self.margins(x))
        return -(self.features.T @ (self.labels * weights)) / self.n


class QuadraticProblem(Objective):
    """Diagonal quadratic 0.5 * sum_j eig_j (x - x_star)_j^2.

    The coordinates are the eigenbasis; the implied linear term is
    -diag(eig) x_star.  The optimum x_star and the optimal value 0 are known
    by construction, which the tests exploit; solvers never read them.
    """

    def __init__(self, eigenvalues, x_star):
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        x_star = np.asarray(x_star, dtype=float)
        if eigenvalues.ndim != 1 or eigenvalues.shape != x_star.shape:
            raise ValueError("eigenvalues and x_star must be equal-length 1-D")
        if np.any(eigenvalues <= 0):
            raise ValueError("eigenvalues must be positive")
        self.eigenvalues = eigenvalues
        self.x_star = x_star
        self.dim = eigenvalues.size
        self.smoothness = float(eigenvalues.max())
        self.f_star = 0.0

    def value(self, x) -> float:
        diff = np.asarray(x, dtype=float) - self.x_star
        return 0.5 * float(self.eigenvalues @ (diff * diff))

    def gradient(self, x) -> np.ndarray:
        return self.eigenvalues * (np.asarray(x, dtype=float) - self.x_star)


class LeastSquaresProblem(Objective):
    """Half mean squared residual (1/2n) ||A x - b||^2."""

    def __init__(self, features, response):
        features = np.asarray(features, dtype=float)
        response = np.asarray(response, dtype=float)
        if features.ndim != 2 or response.shape != (features.shape[0],):
            raise ValueError("need a 2-D feature matrix and matching response")
        self.features = features
        self.response = response
        self.n, self.dim = features.shape
        gram = features.T @ features
        self.smoothness = float(np.linalg.eigvalsh(gram)[-1]) / self.n

    def residual(self, x) -> np.ndarray:
        return self.features @ x - self.response

    def value(self, x) -> float:
        r = self.residual(x)
        return 0.5 * float(r @ r) / self.n

    def gradient(self, x) -> np.ndarray:
        return self.features.T @ self.residual(x) / self.n


class RobustDualProblem(Objective):
    """Dual of absolute-loss regression with squared-norm regularization.

    f(x) = -(1/n) b.x + (1/(2 n^2 lam)) ||A^T x||^2 over the box
    ||x||_inf <= 1, where A is n x d and the variable x lives in R^n.
    """

    def __init__(self, features, response, lam_reg):
        features = np.asarray(features, dtype=float)
        response = np.asarray(response, dtype=float)
        if features.ndim != 2 or response.shape != (features.shape[0],):
            raise ValueError("need a 2-D feature matrix and matching response")
        if lam_reg <= 0:
            raise ValueError("lam_reg must be positive")
        self.features = features
        self.response = response
        self.lam_reg = float(lam_reg)
        self.n, self.d = features.shape
        self.dim = self.n
        gram = features.T @ features  # d x d, the smaller side
        self._scale = 1.0 / (self.n**2 * self.lam_reg)
        self.smoothness = float(np.linalg.eigvalsh(gram)[-1]) * self._scale

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        s = self.features.T @ x
        return float(-self.response @ x / self.n + 0.5 * self._scale * (s @ s))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -self.response / self.n + self._scale * (
            self.features @ (self.features.T @ x)
        )


# ---------------------------------------------------------------------------
# feasible sets / linear minimization oracles


def _sign_pm(values: np.ndarray) -> np.ndarray:
    # sign with the convention sign(0) := +1, so ties resolve deterministically
    return np.where(values >= 0, 1.0, -1.0)


class L1BallOracle:
    """The ell_1 ball of a given radius; vertices are +-radius * e_j."""

    kind = "l1-ball"

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def lmo(self, g: np.ndarray) -> np.ndarray:
        """Vertex minimizing g.v: the largest-|g| coordinate, ties at the
        lowest index, pushed to -radius * sign(g_j) with sign(0) := +1."""
        g = np.asarray(g, dtype=float)
        j = int(np.argmax(np.abs(g)))
        v = np.zeros_like(g)
        v[j] = -self.radius * (1.0 if g[j] >= 0 else -1.0)
        return v

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.abs(x).sum()) <= self.radius + tol

    def make_feasible(self, x: np.ndarray) -> np.ndarray:
        """Rescale toward the origin by min(1, radius/||x||_1)."""
        norm = float(np.abs(x).sum())
        if norm <= self.radius:
            return np.array(x, dtype=float)
        return np.asarray(x, dtype=float) * (self.radius / norm)

    def project(self, x: np.ndarray) -> np.ndarray:
        return l1_ball_projection(x, self.radius)

    def default_start(self, dim: int) -> np.ndarray:
        return np.zeros(dim)

    def vertices(self, dim: int):
        for j in range(dim):
            for s in (1.0, -1.0):
                v = np.zeros(dim)
                v[j] = s * self.radius
                yield v


class BoxOracle:
    """The hypercube [-1, 1]^d."""

    kind = "box-linf"

    def lmo(self, g: np.ndarray) -> np.ndarray:
        """Corner -sign(g), with sign(0) := +1."""
        return -_sign_pm(np.asarray(g, dtype=float))

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.abs(x).max()) <= 1.0 + tol

    def make_feasible(self, x: np.ndarray) -> np.ndarray:
        """Clip coordinate-wise to [-1, 1]."""
        return np.clip(np.asarray(x, dtype=float), -1.0, 1.0)

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.make_feasible(x)

    def default_start(self, dim: int) -> np.ndarray:
        return np.zeros(dim)

    def vertices(self, dim: int):
        if dim > 16:
            raise ValueError("corner enumeration only makes sense for tiny d")
        for bits in range(2**dim):
            yield np.array(
                [1.0 if bits >> j & 1 else -1.0 for j in range(dim)]
            )


def lmo(oracle, g) -> np.ndarray:
    """Vertex of the oracle's feasible set minimizing the linear form g.v."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gradient must be a non-empty vector")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    return oracle.lmo(g)


def l1_ball_projection(x, radius: float) -> np.ndarray:
    """Euclidean projection onto the ell_1 ball by soft thresholding.

    Finds tau >= 0 with sum(max(|x| - tau, 0)) = radius when x is outside the
    ball, via the sorted cumulative-sum rule.
    """
    x = np.asarray(x, dtype=float)
    if radius <= 0:
        raise ValueError("radius must be positive")
    mags = np.abs(x)
    if mags.sum() <= radius:
        return x.copy()
    u = np.sort(mags)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, x.size + 1)
    rho = np.nonzero(u * j > css - radius)[0][-1]
    tau = (css[rho] - radius) / (rho + 1.0)
    return _sign_pm(x) * np.maximum(mags - tau, 0.0)


# ---------------------------------------------------------------------------
# instance generators


def gen_logistic(n, d, covariance_spectrum, seed, label_noise=0.5):
    """Logistic instance with Gaussian inputs of a given diagonal covariance.

    Rows are a_i = sqrt(spectrum) * z_i with z_i standard normal, expressed
    directly in the covariance eigenbasis.  Labels come from a random
    hyperplane, b_i = sign(a_i.w0 + eps_i), where eps_i is Gaussian with a
    standard deviation of ``label_noise`` times the empirical margin spread;
    the noise flips a fraction of labels so the optimum keeps finite margins.
    """
    spectrum = np.asarray(covariance_spectrum, dtype=float)
    if spectrum.shape != (d,) or np.any(spectrum <= 0):
        raise ValueError("covariance_spectrum must be d positive values")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d)) * np.sqrt(spectrum)
    w0 = rng.standard_normal(d)
    margin = features @ w0
    if label_noise > 0:
        margin = margin + rng.standard_normal(n) * (
            label_noise * float(np.std(margin))
        )
    labels = _sign_pm(margin)
    return LogisticProblem(features, labels)


def _pilot_ridge_logistic(problem, ridge=1e-2, iters=400):
    # crude plain-GD solve of the l2-regularized problem; only the rough
    # magnitude of ||x||_1 matters, so no convergence ceremony here
    step = 1.0 / (problem.smoothness + ridge)
    x = np.zeros(problem.dim)
    for _ in range(iters):
        x -= step * (problem.gradient(x) + ridge * x)
    return x


def gen_fw_lasso(n, d, seed, radius=None):
    """Logistic regression over an ell_1 ball, standard normal inputs.

    When no radius is given, a pilot run solves the lightly l2-regularized
    unconstrained problem and the radius is set to 0.3 of that solution's
    ell_1 norm.  The constraint then binds on a low-dimensional face, which
    is the regime where the open-loop step sizes show their asymptotic
    rates inside a few thousand iterations; at looser radii the face is
    wider and the extrapolated sequence needs far more iterations to leave
    its transient.
    """
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    w0 = rng.standard_normal(d)
    margin = features @ w0
    margin = margin + rng.standard_normal(n) * (0.5 * float(np.std(margin)))
    problem = LogisticProblem(features, _sign_pm(margin))
    if radius is None:
        pilot = _pilot_ridge_logistic(problem)
        radius = 0.3 * float(np.abs(pilot).sum())
    return problem, L1BallOracle(radius)


def gen_robust_dual(n, d, seed, lam_reg=None):
    """Box-constrained dual instance with standard normal data.

    The default regularization 0.2 keeps the quadratic term weak enough
    that most dual coordinates sit at their bounds.  With a near-interior
    optimum (small lam_reg) the extrapolated iterates pick up an extra
    error cancellation and their decay drifts well below the k^-2 line
    within the measurement window.
    """
    if lam_reg is None:
        lam_reg = 0.2
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    response = rng.standard_normal(n)
    return RobustDualProblem(features, response, lam_reg), BoxOracle()


def gen_penalized_lasso(n, d, seed, l1_weight=None):
    """Least-squares term and ell_1 weight for the penalized Lasso.

    Design and response are both standard normal, so the regression has no
    planted signal and the square case n = d leaves the Gram matrix close
    to singular.  The default weight is half of ||A^T b||_inf/n (the weight
    at which the solution becomes identically zero), which puts the optimum
    around 20% support at the default sizes: sparse but not a few isolated
    spikes.

    Returns:
        (LeastSquaresProblem, l1_weight).
    """
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    response = rng.standard_normal(n)
    problem = LeastSquaresProblem(features, response)
    if l1_weight is None:
        weight_max = float(
            np.abs(features.T @ response).max()
        ) / n
        l1_weight = 0.5 * weight_max
    return problem, float(l1_weight)


# ---------------------------------------------------------------------------
# dataset CSV round trip


def save_dataset(path, features, labels) -> None:
    """Write a dataset as CSV, one row per sample, label in the last column."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ValueError("need a 2-D feature matrix and matching labels")
    table = np.column_stack([features, labels])
    np.savetxt(path, table, delimiter=",", fmt="%.17g")


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a dataset written by :func:`save_dataset`."""
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    return table[:, :-1], table[:, -1]
