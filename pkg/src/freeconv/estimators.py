"""scikit-learn style front end to the subordination solver."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError
from .measures import Measure
from .solver import SolverConfig, _run_rays, free_convolve
from .validation import check_spectral_points


class FreeAdditiveConvolution(BaseEstimator):
    """Limiting spectral law of ``A + U* B U`` from the spectral laws of A and B.

    Parameters
    ----------
    epsilon : float
        Height ``Im z`` at which the density is read off.
    grid_points : int
        Size of the initial uniform λ-grid before adaptive refinement.
    margin : float
        Padding of the λ-grid, as a fraction of the width of the support bound.
    y_start : float or None
        Start height of the vertical continuation; ``None`` picks it from the
        input supports.
    continuation_factor, damping, tol, max_iter
        Iteration controls, see :class:`~freeconv.solver.SolverConfig`.
    refine : bool
        Bisect grid cells until the trapezoid mass is resolved.
    richardson : bool
        Combine solves at ``epsilon`` and ``epsilon / 2`` to cancel the
        first-order smoothing bias.
    atom_threshold : float
        Smallest reported atom mass.

    Attributes
    ----------
    density_ : DensityEstimate
    atoms_ : list of (position, mass)
    lambdas_ : ndarray
    """

    def __init__(self, epsilon=1e-3, grid_points=400, margin=0.25, y_start=None,
                 continuation_factor=0.7, damping=0.5, tol=1e-12, max_iter=10000,
                 refine=True, richardson=False, atom_threshold=0.01):
        self.epsilon = epsilon
        self.grid_points = grid_points
        self.margin = margin
        self.y_start = y_start
        self.continuation_factor = continuation_factor
        self.damping = damping
        self.tol = tol
        self.max_iter = max_iter
        self.refine = refine
        self.richardson = richardson
        self.atom_threshold = atom_threshold

    def _config(self):
        return SolverConfig(
            y_start=self.y_start,
            y_target=self.epsilon,
            continuation_factor=self.continuation_factor,
            damping=self.damping,
            tol=self.tol,
            max_iter=self.max_iter,
            grid_points=self.grid_points,
            margin=self.margin,
            refine=self.refine,
            richardson=self.richardson,
            atom_threshold=self.atom_threshold,
        )

    def fit(self, X, y):
        """Solve for ``X ⊞ y`` where both are :class:`~freeconv.measures.Measure`."""
        if not isinstance(X, Measure) or not isinstance(y, Measure):
            raise DomainError("fit expects two Measure instances")
        self.config_ = self._config()
        self.n1_, self.n2_ = X, y
        self.density_ = free_convolve(X, y, self.config_)
        self.atoms_ = list(self.density_.atoms)
        self.lambdas_ = self.density_.lambdas
        return self

    def predict(self, X):
        """Recovered density at the points ``X`` (atoms excluded)."""
        check_is_fitted(self, "density_")
        return self.density_.density(np.asarray(X, dtype=float))

    def cdf(self, X):
        check_is_fitted(self, "density_")
        return self.density_.cdf(X)

    def stieltjes(self, z):
        """Stieltjes transform of the fitted convolution at points off the axis."""
        check_is_fitted(self, "density_")
        z = np.atleast_1d(check_spectral_points(z))
        out = np.empty(z.shape, dtype=complex)
        for i, zi in enumerate(z):
            zu = zi if zi.imag > 0 else np.conj(zi)
            f = _run_rays(self.n1_, self.n2_, [zu.real], [zu.imag], self.config_)[zu.imag][1][0]
            out[i] = f if zi.imag > 0 else np.conj(f)
        return out

    def score(self, X, y=None):
        """Negative Kolmogorov distance between eigenvalues ``X`` and the fitted law."""
        check_is_fitted(self, "density_")
        x = np.sort(np.asarray(X, dtype=float).ravel())
        f = self.density_.cdf(x)
        k = np.arange(1, x.size + 1) / x.size
        return -float(max(np.max(np.abs(k - f)), np.max(np.abs(k - 1.0 / x.size - f))))
