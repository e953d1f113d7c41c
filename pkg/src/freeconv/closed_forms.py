"""Analytic free convolutions and the scalar functional equations they reduce to.

These are ground truth for the general subordination solver: semicircle
laws, the self-convolution of a two-point law and of the arcsine law,
the deformed GUE equation ``f = f0(z + 2 w2 f)`` and the Marchenko-Pastur
family ``f = f0(z - c Σ_j w_j τ_j / (1 + τ_j f))``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DomainError
from .measures import Atoms, Semicircle
from .solver import SolverConfig
from .validation import check_positive, check_spectral_points

__all__ = [
    "ClosedFormResult",
    "semicircle_law",
    "two_atom_self_conv",
    "arcsine_self_conv",
    "semicircle_add",
    "deformed_gue_stieltjes",
    "mp_stieltjes",
    "mp_deformation_stieltjes",
    "mp_density",
]


@dataclass
class ClosedFormResult:
    """Atoms, absolutely continuous density and Stieltjes transform of a law."""

    atoms: list
    density: callable
    support: tuple
    stieltjes: callable
    label: str = ""
    extra: dict = field(default_factory=dict)

    def continuous_mass(self):
        from scipy.integrate import quad

        a, b = self.support
        if b <= a:
            return 0.0
        return quad(self.density, a, b, limit=200)[0]

    def cdf(self, x):
        from scipy.integrate import quad

        a, b = self.support
        out = []
        for xi in np.atleast_1d(x):
            val = sum(m for p, m in self.atoms if p <= xi)
            if b > a and xi > a:
                val += quad(self.density, a, min(xi, b), limit=200)[0]
            out.append(val)
        return np.array(out)


def semicircle_law(w2):
    """Wigner's semicircle law with variance ``2 w2``."""
    m = Semicircle(w2)
    return ClosedFormResult([], m.density, m.support(), m.stieltjes, f"semicircle(w2={w2:g})")


def two_atom_self_conv(alpha, a):
    """``N ⊞ N`` for ``N = α δ_0 + (1-α) δ_a``.

    Atoms ``(2α-1)_+`` at 0 and ``(1-2α)_+`` at ``2a``; the absolutely
    continuous part lives on ``[λ-, λ+]``, ``λ± = a(1 ± 2 sqrt(α(1-α)))``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    a = check_positive(a, "a")
    atoms = []
    if 2 * alpha - 1 > 0:
        atoms.append((0.0, 2 * alpha - 1))
    if 1 - 2 * alpha > 0:
        atoms.append((2 * a, 1 - 2 * alpha))
    root = 2.0 * math.sqrt(alpha * (1.0 - alpha))
    lo, hi = a * (1.0 - root), a * (1.0 + root)

    def density(lam):
        lam = np.asarray(lam, dtype=float)
        inside = (lam > lo) & (lam < hi) & (lam > 0) & (lam < 2 * a)
        num = np.sqrt(np.clip((hi - lam) * (lam - lo), 0.0, None))
        den = np.where(inside, np.abs(lam * (lam - 2 * a)), 1.0)
        return np.where(inside, num / (math.pi * den), 0.0)

    def stieltjes(z):
        z = check_spectral_points(z)
        # roots of z(z-2a) f² + 2a(1-2α) f - 1 = 0
        q = z * (z - 2 * a)
        b = 2 * a * (1 - 2 * alpha)
        r = np.sqrt(b * b + 4 * q)
        cands = ((-b + r) / (2 * q), (-b - r) / (2 * q))
        return _pick_stieltjes(cands, z)

    support = (lo, hi) if hi > lo else (a, a)
    return ClosedFormResult(atoms, density, support, stieltjes, f"two-atom(alpha={alpha:g}, a={a:g})")


def _pick_stieltjes(cands, z):
    """Select the root obeying both the sign and the size bound of a transform."""
    c1, c2 = (np.asarray(c) for c in cands)
    bound = 1.0 / np.abs(z.imag)
    ok1 = (c1.imag * z.imag > 0) & (np.abs(c1) <= bound * (1 + 1e-12))
    ok2 = (c2.imag * z.imag > 0) & (np.abs(c2) <= bound * (1 + 1e-12))
    # both admissible: the transform is the one asymptotic to -1/z
    closer1 = np.abs(c1 * z + 1) <= np.abs(c2 * z + 1)
    out = np.where(ok1 & ~ok2, c1, np.where(ok2 & ~ok1, c2, np.where(closer1, c1, c2)))
    return out if out.ndim else complex(out)


def arcsine_self_conv(a):
    """``N ⊞ N`` for the arcsine law on ``[-a, a]``.

    Density ``2 sqrt(3a² - λ²) / (π (4a² - λ²))`` on ``[-sqrt(3) a, sqrt(3) a]``,
    from ``(z² - 4a²) f² - 2 z f - 3 = 0``.
    """
    a = check_positive(a, "a")
    edge = math.sqrt(3.0) * a

    def density(lam):
        lam = np.asarray(lam, dtype=float)
        inside = np.abs(lam) < edge
        return np.where(
            inside,
            2.0 * np.sqrt(np.clip(3 * a * a - lam**2, 0.0, None)) / (math.pi * (4 * a * a - lam**2)),
            0.0,
        )

    def stieltjes(z):
        z = check_spectral_points(z)
        r = 2.0 * np.sqrt(z * z - 3 * a * a)
        q = z * z - 4 * a * a
        return _pick_stieltjes(((z + r) / q, (z - r) / q), z)

    return ClosedFormResult([], density, (-edge, edge), stieltjes, f"arcsine-self(a={a:g})")


def arcsine_self_conv_as_printed(a):
    """Density ``sqrt(3a² - λ²) / (π (4a² - λ²))`` exactly as usually quoted.

    This expression carries total mass 1/2; it is kept for comparison only.
    """
    a = check_positive(a, "a")
    full = arcsine_self_conv(a)
    return lambda lam: 0.5 * full.density(lam)


def semicircle_add(w1sq, w2sq):
    """Variance parameter of the free sum of two semicircle laws."""
    if w1sq < 0 or w2sq < 0:
        raise DomainError("semicircle parameters must be nonnegative")
    return w1sq + w2sq


def _as_callable(f0):
    if hasattr(f0, "stieltjes"):
        return f0.stieltjes
    return f0


def _scalar_fixed_point(fmap, z, cfg, start=None):
    """Solve ``f = fmap(f, z)`` at one point by damped Picard with Newton steps.

    For small ``Im z`` the solution is continued down from a large imaginary
    part so the iterate stays on the branch selected at infinity.
    """
    z = complex(z)
    flip = z.imag < 0
    if flip:
        z = z.conjugate()
    y_top = max(8.0 * (1.0 + abs(z.real)), z.imag)
    ys = [y_top]
    while ys[-1] * cfg.continuation_factor > z.imag:
        ys.append(ys[-1] * cfg.continuation_factor)
    ys.append(z.imag)
    f = -1.0 / complex(z.real, ys[0]) if start is None else start
    for y in ys:
        zz = complex(z.real, y)
        f = _fixed_point_at(fmap, zz, f, cfg)
    return f.conjugate() if flip else f


def _fixed_point_at(fmap, z, f, cfg):
    theta = cfg.damping
    res = abs(fmap(f, z) - f)
    for _ in range(cfg.max_iter):
        scale = max(1.0, abs(f))
        if res <= cfg.tol * scale:
            return f
        g = fmap(f, z) - f
        new = f + theta * g
        # Newton step; the map is analytic so a real difference step gives f'
        h = 1e-7 * max(abs(f), 1e-3)
        dg = (fmap(f + h, z) - (f + h) - g) / h
        if dg != 0:
            cand = f - g / dg
            if cand.imag * z.imag > 0 and np.isfinite(cand):
                rc = abs(fmap(cand, z) - cand)
                if rc < res:
                    new = cand
        rn = abs(fmap(new, z) - new)
        theta = max(theta / 2, cfg.min_damping) if rn > res else cfg.damping
        f, res = new, rn
    raise ConvergenceError(f"fixed point did not converge at z={z} (residual {res:.3g})", best_state=f)


def deformed_gue_stieltjes(f0, w2, z, cfg=None):
    """Solve ``f = f0(z + 2 w2 f)`` for the Nevanlinna solution."""
    cfg = cfg or SolverConfig()
    check_spectral_points(z)
    if w2 < 0:
        raise DomainError("w2 must be nonnegative")
    f0 = _as_callable(f0)
    if w2 == 0:
        return complex(f0(complex(z)))
    return _scalar_fixed_point(lambda f, zz: complex(f0(zz + 2.0 * w2 * f)), z, cfg)


def _mp_shift(c, sigma):
    if not isinstance(sigma, Atoms):
        raise DomainError("sigma must be an atomic measure")
    if c < 0:
        raise DomainError("c must be nonnegative")
    tau, w = sigma.points, sigma.weights

    def shift(f):
        return c * complex(np.sum(w * tau / (1.0 + tau * f)))

    return shift


def mp_stieltjes(c, sigma, z, cfg=None):
    """Marchenko-Pastur transform: ``f = -1 / (z - c Σ_j w_j τ_j / (1 + τ_j f))``."""
    cfg = cfg or SolverConfig()
    z = complex(check_spectral_points(z))
    shift = _mp_shift(c, sigma)
    if c == 0:
        return -1.0 / z
    return _scalar_fixed_point(lambda f, zz: -1.0 / (zz - shift(f)), z, cfg)


def mp_deformation_stieltjes(f0, c, sigma, z, cfg=None):
    """Solve ``f = f0(z - c Σ_j w_j τ_j / (1 + τ_j f))``."""
    cfg = cfg or SolverConfig()
    z = complex(check_spectral_points(z))
    shift = _mp_shift(c, sigma)
    f0 = _as_callable(f0)
    if c == 0:
        return complex(f0(z))
    return _scalar_fixed_point(lambda f, zz: complex(f0(zz - shift(f))), z, cfg)


def mp_density(c, sigma, lambdas, eps=1e-8, cfg=None):
    """Density of the Marchenko-Pastur law by inversion at height ``eps``."""
    cfg = cfg or SolverConfig()
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    out = np.empty(lambdas.shape)
    for i, lam in enumerate(lambdas):
        f = mp_stieltjes(c, sigma, complex(lam, eps), cfg)
        out[i] = max(f.imag, 0.0) / math.pi
    return out
