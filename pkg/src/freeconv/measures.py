"""Probability measures on the real line and their Stieltjes transforms.

The Stieltjes transform convention throughout the package is

    s(z) = ∫ m(dλ) / (λ - z),

so that ``s(z) ~ -1/z`` at infinity and ``Im s(z) * Im z > 0``.

Supported are finite atomic measures, the semicircle law
with variance parameter ``w2`` (density ``sqrt(8 w2 - λ²) / (4π w2)``),
the arcsine law on ``[-a, a]``, translates of those two laws and
densities tabulated on a grid.
All measures are immutable once constructed.
"""
import math

import numpy as np
from scipy.special import comb

from .exceptions import DomainError
from .validation import check_positive, check_spectral_points

MASS_TOL = 1e-9
MERGE_TOL = 1e-12

__all__ = [
    "Measure",
    "Atoms",
    "Semicircle",
    "Arcsine",
    "GridDensity",
    "Shifted",
    "point_mass",
    "shift",
    "stieltjes_eval",
    "stieltjes_derivative",
    "moment",
    "support_bounds",
    "measure_from_dict",
    "measure_to_dict",
]


def _nevanlinna_pick(r1, r2, z):
    """Pick, elementwise, the candidate with ``Im s * Im z > 0``."""
    good1 = r1.imag * z.imag > 0
    return np.where(good1, r1, r2)


class Measure:
    """Base class for probability measures on the real line."""

    kind = None

    def stieltjes(self, z):
        """Stieltjes transform at ``z`` (scalar or array, ``Im z != 0``)."""
        z = check_spectral_points(z)
        out = self._stieltjes(np.atleast_1d(z).ravel()).reshape(z.shape)
        return out if out.ndim else complex(out)

    def stieltjes_derivative(self, z):
        """Derivative ``s'(z) = ∫ m(dλ) / (λ - z)²``."""
        z = check_spectral_points(z)
        out = self._stieltjes_derivative(np.atleast_1d(z).ravel()).reshape(z.shape)
        return out if out.ndim else complex(out)

    def __call__(self, z):
        return self.stieltjes(z)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self._cdf(np.atleast_1d(x).ravel()).reshape(x.shape)
        return out if out.ndim else float(out)

    def quantile(self, p):
        """Left-continuous inverse of the distribution function."""
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise DomainError("quantile levels must lie in (0, 1)")
        out = self._quantile(np.atleast_1d(p).ravel()).reshape(p.shape)
        return out if out.ndim else float(out)

    @property
    def is_point_mass(self):
        return False

    @property
    def max_density(self):
        """Essential supremum of the density (``inf`` if not bounded)."""
        return math.inf

    def radius(self):
        a, b = self.support()
        return max(abs(a), abs(b))

    # subclasses fill these in
    def _stieltjes(self, z):
        raise NotImplementedError

    def _stieltjes_derivative(self, z):
        raise NotImplementedError

    def moment(self, k):
        raise NotImplementedError

    def support(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


class Atoms(Measure):
    """Finite atomic measure ``sum_j w_j δ_{x_j}``.

    Points closer than ``1e-12`` are merged. Weights must be positive and
    sum to one within ``1e-9``; they are then rescaled to sum exactly to one.
    """

    kind = "atoms"

    def __init__(self, points, weights=None):
        x = np.atleast_1d(np.asarray(points, dtype=float))
        if weights is None:
            w = np.full(x.shape, 1.0 / max(x.size, 1))
        else:
            w = np.atleast_1d(np.asarray(weights, dtype=float))
        if x.ndim != 1 or x.size == 0 or w.shape != x.shape:
            raise DomainError("atoms need matching non-empty position and mass lists")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise DomainError("atom positions and masses must be finite")
        if np.any(w <= 0) or np.any(w > 1 + MASS_TOL):
            raise DomainError("atom masses must lie in (0, 1]")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise DomainError(f"atom masses sum to {w.sum()!r}, expected 1")
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        xs, ws = [x[0]], [w[0]]
        for xi, wi in zip(x[1:], w[1:]):
            if xi - xs[-1] <= MERGE_TOL:
                ws[-1] += wi
            else:
                xs.append(xi)
                ws.append(wi)
        self.points = np.array(xs)
        self.weights = np.array(ws) / np.sum(ws)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls([p for p, _ in pairs], [w for _, w in pairs])

    def __repr__(self):
        pairs = ", ".join(f"({x:g}, {w:g})" for x, w in zip(self.points, self.weights))
        return f"Atoms[{pairs}]"

    @property
    def is_point_mass(self):
        return self.points.size == 1

    def _stieltjes(self, z):
        return (self.weights / (self.points - z[:, None])).sum(axis=1)

    def _stieltjes_derivative(self, z):
        return (self.weights / (self.points - z[:, None]) ** 2).sum(axis=1)

    def moment(self, k):
        return float(np.sum(self.weights * self.points**k))

    def support(self):
        return float(self.points[0]), float(self.points[-1])

    def _cdf(self, x):
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(self.points, x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0).clip(0.0, 1.0)

    def _quantile(self, p):
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        # tolerate rounding at exact step levels such as p = 1/2
        idx = np.searchsorted(cum, p - 1e-12, side="left")
        return self.points[np.minimum(idx, self.points.size - 1)]

    def to_dict(self):
        return {
            "type": "atoms",
            "points": [{"x": float(x), "w": float(w)} for x, w in zip(self.points, self.weights)],
        }


class Semicircle(Measure):
    """Semicircle law with density ``sqrt(8 w2 - λ²) / (4π w2)``.

    The variance is ``2 w2``; the support is ``[-2 sqrt(2 w2), 2 sqrt(2 w2)]``.
    """

    kind = "semicircle"

    def __init__(self, w2):
        self.w2 = check_positive(w2, "w2")

    def __repr__(self):
        return f"Semicircle(w2={self.w2:g})"

    @property
    def edge(self):
        return 2.0 * math.sqrt(2.0 * self.w2)

    @property
    def max_density(self):
        return math.sqrt(8.0 * self.w2) / (4.0 * math.pi * self.w2)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.clip(8.0 * self.w2 - x**2, 0.0, None)) / (4.0 * math.pi * self.w2)

    def _stieltjes(self, z):
        # roots of 2 w2 s² + z s + 1 = 0, formed without cancellation
        r = np.sqrt(z * z - 8.0 * self.w2)
        r = np.where((np.conj(z) * r).real >= 0, r, -r)
        q = -z - r
        return _nevanlinna_pick(2.0 / q, q / (4.0 * self.w2), z)

    def _stieltjes_derivative(self, z):
        s = self._stieltjes(z)
        return -s / (4.0 * self.w2 * s + z)

    def moment(self, k):
        if k % 2:
            return 0.0
        j = k // 2
        catalan = comb(2 * j, j, exact=True) // (j + 1)
        return float(catalan * (2.0 * self.w2) ** j)

    def support(self):
        return -self.edge, self.edge

    def _cdf(self, x):
        r = self.edge
        t = np.clip(x / r, -1.0, 1.0)
        return 0.5 + (t * np.sqrt(1.0 - t * t) + np.arcsin(t)) / math.pi

    def _quantile(self, p):
        lo = np.full(p.shape, -self.edge)
        hi = np.full(p.shape, self.edge)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self._cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def to_dict(self):
        return {"type": "semicircle", "w2": self.w2}


class Arcsine(Measure):
    """Arcsine law ``dλ / (π sqrt(a² - λ²))`` on ``[-a, a]``."""

    kind = "arcsine"

    def __init__(self, a):
        self.a = check_positive(a, "a")

    def __repr__(self):
        return f"Arcsine(a={self.a:g})"

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < self.a
        safe = np.where(inside, self.a**2 - x**2, 1.0)
        return np.where(inside, 1.0 / (math.pi * np.sqrt(safe)), 0.0)

    def _stieltjes(self, z):
        s = -1.0 / np.sqrt(z * z - self.a**2)
        return _nevanlinna_pick(s, -s, z)

    def _stieltjes_derivative(self, z):
        s = self._stieltjes(z)
        return -z * s**3

    def moment(self, k):
        if k % 2:
            return 0.0
        j = k // 2
        return float(comb(2 * j, j, exact=True) * (self.a / 2.0) ** (2 * j))

    def support(self):
        return -self.a, self.a

    def _cdf(self, x):
        t = np.clip(x / self.a, -1.0, 1.0)
        return 0.5 + np.arcsin(t) / math.pi

    def _quantile(self, p):
        return self.a * np.sin(math.pi * (p - 0.5))

    def to_dict(self):
        return {"type": "arcsine", "a": self.a}


class GridDensity(Measure):
    """Density given by values ``ps`` on a strictly increasing grid ``xs``.

    The density is the piecewise-linear interpolant of the samples, zero
    outside ``[xs[0], xs[-1]]``, rescaled so its trapezoid integral is one.
    Stieltjes transforms are integrated exactly against that interpolant.
    """

    kind = "grid"

    def __init__(self, xs, ps):
        xs = np.asarray(xs, dtype=float)
        ps = np.asarray(ps, dtype=float)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size < 2:
            raise DomainError("grid density needs >= 2 points and matching xs/ps")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
            raise DomainError("grid density values must be finite")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("grid xs must be strictly increasing")
        if np.any(ps < 0):
            raise DomainError("grid density values must be nonnegative")
        mass = np.trapezoid(ps, xs)
        if mass <= 0:
            raise DomainError("grid density has zero mass")
        self.xs = xs.copy()
        self.ps = ps / mass
        self.xs.setflags(write=False)
        self.ps.setflags(write=False)

    def __repr__(self):
        return f"GridDensity({self.xs.size} points on [{self.xs[0]:g}, {self.xs[-1]:g}])"

    @property
    def max_density(self):
        return float(self.ps.max())

    def density(self, x):
        return np.interp(x, self.xs, self.ps, left=0.0, right=0.0)

    def _segments(self):
        x0 = self.xs[:-1]
        h = np.diff(self.xs)
        p0 = self.ps[:-1]
        slope = np.diff(self.ps) / h
        return x0, h, p0, slope

    def _chunks(self, z):
        step = max(1, 2_000_000 // self.xs.size)
        for i in range(0, z.size, step):
            yield slice(i, i + step), z[i : i + step, None]

    def _stieltjes(self, z):
        x0, h, p0, slope = self._segments()
        out = np.empty(z.shape, dtype=complex)
        for sl, zc in self._chunks(z):
            d = x0 - zc
            u = h / d
            log1p = np.log1p(u)
            out[sl] = (p0 * log1p + slope * d * _u_minus_log1p(u, log1p)).sum(axis=1)
        return out

    def _stieltjes_derivative(self, z):
        x0, h, p0, slope = self._segments()
        out = np.empty(z.shape, dtype=complex)
        for sl, zc in self._chunks(z):
            d = x0 - zc
            u = h / d
            log1p = np.log1p(u)
            out[sl] = (p0 * h / (d * (d + h)) + slope * _log1p_minus_ratio(u, log1p)).sum(axis=1)
        return out

    def moment(self, k):
        return float(np.trapezoid(self.xs**k * self.ps, self.xs))

    def support(self):
        pos = np.flatnonzero(self.ps > 0)
        lo = max(pos[0] - 1, 0)
        hi = min(pos[-1] + 1, self.xs.size - 1)
        return float(self.xs[lo]), float(self.xs[hi])

    def _cum(self):
        h = np.diff(self.xs)
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (self.ps[:-1] + self.ps[1:]))])

    def _cdf(self, x):
        cum = self._cum()
        i = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.xs.size - 2)
        t = np.clip(x - self.xs[i], 0.0, self.xs[i + 1] - self.xs[i])
        slope = (self.ps[i + 1] - self.ps[i]) / (self.xs[i + 1] - self.xs[i])
        val = cum[i] + self.ps[i] * t + 0.5 * slope * t * t
        val = np.where(x < self.xs[0], 0.0, val)
        return np.where(x >= self.xs[-1], 1.0, val).clip(0.0, 1.0)

    def _quantile(self, p):
        cum = self._cum()
        i = np.clip(np.searchsorted(cum, p, side="left") - 1, 0, self.xs.size - 2)
        slope = (self.ps[i + 1] - self.ps[i]) / (self.xs[i + 1] - self.xs[i])
        rem = p - cum[i]
        disc = np.sqrt(np.clip(self.ps[i] ** 2 + 2.0 * slope * rem, 0.0, None))
        denom = self.ps[i] + disc
        safe = np.where(denom > 0, denom, 1.0)
        t = np.where(denom > 0, 2.0 * rem / safe, 0.0)
        return np.clip(self.xs[i] + t, self.xs[i], self.xs[i + 1])

    def to_dict(self):
        return {"type": "grid", "xs": self.xs.tolist(), "ps": self.ps.tolist()}


def _u_minus_log1p(u, log1p):
    # u - log(1+u), with a series where the difference cancels
    small = np.abs(u) < 1e-2
    series = u * u * (1 / 2 - u * (1 / 3 - u * (1 / 4 - u * (1 / 5 - u * (1 / 6 - u / 7)))))
    return np.where(small, series, u - log1p)


def _log1p_minus_ratio(u, log1p):
    # log(1+u) - u/(1+u)
    small = np.abs(u) < 1e-2
    series = u * u * (1 / 2 - u * (2 / 3 - u * (3 / 4 - u * (4 / 5 - u * (5 / 6 - u * 6 / 7)))))
    return np.where(small, series, log1p - u / (1.0 + u))


def point_mass(c=0.0):
    return Atoms([c], [1.0])


class Shifted(Measure):
    """Translate of a semicircle or arcsine law, ``m(· - c)``.

    Transforms are evaluated exactly as ``s(z - c)`` of the centred law.
    """

    kind = "shifted"

    def __init__(self, base, c):
        if not isinstance(base, (Semicircle, Arcsine)):
            raise DomainError("only semicircle and arcsine laws are shifted lazily")
        c = float(c)
        if not math.isfinite(c):
            raise DomainError("shift must be finite")
        self.base, self.c = base, c

    def __repr__(self):
        return f"Shifted({self.base!r}, {self.c:g})"

    @property
    def max_density(self):
        return self.base.max_density

    def density(self, x):
        return self.base.density(np.asarray(x, dtype=float) - self.c)

    def _stieltjes(self, z):
        return self.base._stieltjes(z - self.c)

    def _stieltjes_derivative(self, z):
        return self.base._stieltjes_derivative(z - self.c)

    def _cdf(self, x):
        return self.base._cdf(x - self.c)

    def _quantile(self, p):
        return self.base._quantile(p) + self.c

    def moment(self, k):
        return sum(comb(k, j, exact=True) * self.c ** (k - j) * self.base.moment(j) for j in range(k + 1))

    def support(self):
        a, b = self.base.support()
        return (a + self.c, b + self.c)

    def to_dict(self):
        return {"type": "shifted", "shift": self.c, "base": self.base.to_dict()}


def shift(m, c):
    """Translate measure ``m`` by ``c``."""
    if isinstance(m, Atoms):
        return Atoms(m.points + c, m.weights)
    if isinstance(m, GridDensity):
        return GridDensity(m.xs + c, m.ps)
    if isinstance(m, Shifted):
        return Shifted(m.base, m.c + c)
    return Shifted(m, c)


def stieltjes_eval(m, z):
    return m.stieltjes(z)


def stieltjes_derivative(m, z):
    return m.stieltjes_derivative(z)


def moment(m, k):
    if not isinstance(k, (int, np.integer)) or k < 0 or k > 8:
        raise DomainError("moment order must be an integer in [0, 8]")
    return m.moment(int(k))


def support_bounds(m):
    return m.support()


def measure_from_dict(data):
    """Build a measure from its JSON-style dictionary."""
    if not isinstance(data, dict) or "type" not in data:
        raise DomainError("measure description must be an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "atoms":
            pts = data["points"]
            return Atoms([p["x"] for p in pts], [p["w"] for p in pts])
        if kind == "semicircle":
            return Semicircle(data["w2"])
        if kind == "arcsine":
            return Arcsine(data["a"])
        if kind == "grid":
            return GridDensity(data["xs"], data["ps"])
        if kind == "shifted":
            return Shifted(measure_from_dict(data["base"]), data["shift"])
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed {kind!r} measure: missing or bad field {exc}") from exc
    raise DomainError(f"unknown measure type {kind!r}")


def measure_to_dict(m):
    return m.to_dict()
