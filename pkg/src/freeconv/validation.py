"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""
import numbers

import numpy as np

from .exceptions import DomainError


def check_spectral_points(z, *, upper=False):
    """Return ``z`` as a complex ndarray, rejecting points on the real axis.

    Parameters
    ----------
    z : complex or array_like of complex
    upper : bool
        If True, also require ``Im z > 0``.
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("spectral points must be finite")
    im = z.imag
    if upper:
        if np.any(im <= 0):
            raise DomainError("spectral points must satisfy Im z > 0")
    elif np.any(im == 0):
        raise DomainError("spectral points must lie off the real axis")
    return z


def check_lambda_grid(lambdas):
    """Return a strictly increasing 1-d float grid."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size < 1:
        raise DomainError("lambda grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(lambdas)):
        raise DomainError("lambda grid must be finite")
    if lambdas.size > 1 and np.any(np.diff(lambdas) <= 0):
        raise DomainError("lambda grid must be strictly increasing")
    return lambdas


def check_positive(value, name, *, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise DomainError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_dimension(n, name="n", minimum=1):
    if not isinstance(n, numbers.Integral) or n < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_hermitian(a, atol=1e-12):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("expected a square matrix")
    if not np.allclose(a, a.conj().T, rtol=0, atol=atol):
        raise DomainError("matrix is not Hermitian")
    return a
