"""Richardson extrapolation for optimization and regularized estimation.

The package groups four ingredients around one idea, cancelling the leading
regularization or iteration bias of an estimator by combining it at several
scales with signed binomial weights:

* :mod:`richext.extrapolation` -- the weights, the combination rule, and the
  closed-form spectral filter of the extrapolated ridge smoother;
* :mod:`richext.solvers` -- averaged gradient descent, Nesterov's accelerated
  method, and open-loop Frank-Wolfe, each recording extrapolated companion
  iterates along a geometric checkpoint schedule;
* :mod:`richext.smoothing` -- Nesterov smoothing of polyhedral non-smooth
  terms with entropic or quadratic dual penalties, extrapolated across the
  smoothing parameter;
* :mod:`richext.ridge` -- kernel ridge regression smoothers, their
  extrapolated versions, and bias/variance analytics under power-law decay.

:mod:`richext.analysis` provides reference optima with certificates and the
log-log slope fits used to verify convergence rates; :mod:`richext.cli` runs
the experiments end to end and emits CSV.
"""

__version__ = "0.1.0"

from . import analysis, extrapolation, problems, ridge, smoothing, solvers

__all__ = [
    "analysis",
    "extrapolation",
    "problems",
    "ridge",
    "smoothing",
    "solvers",
    "__version__",
]
