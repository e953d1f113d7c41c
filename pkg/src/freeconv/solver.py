"""Free additive convolution through the subordination system.

For spectral measures ``n1`` and ``n2`` with Stieltjes transforms ``f1`` and
``f2``, the transform ``f`` of the limiting spectral measure of
``A + U* B U`` solves, together with two auxiliary functions ``Δ1`` and
``Δ2``, the system

    f = f1(z - Δ2 / f)
    f = f2(z - Δ1 / f)
    Δ1 + Δ2 = 1 + z f.

The arguments ``ω1 = z - Δ2/f`` and ``ω2 = z - Δ1/f`` are the subordination
points. Eliminating ``f`` and the ``Δ``'s gives a fixed point in ``ω1`` alone,

    ω1 = z + h2(z + h1(ω1)),    h_r(w) = -1/f_r(w) - w,

which maps the upper half plane into itself. The solver iterates that map
with damping and accelerates it with safeguarded Newton steps; the state
``(f, Δ1, Δ2)`` is rebuilt from ``ω1`` each sweep with the linear third
equation imposed exactly. Near the real axis the unique solution branch is
reached by continuation down vertical rays from a large imaginary part.
"""
import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConvergenceError, DomainError
from .measures import Atoms, Measure
from .validation import check_lambda_grid, check_spectral_points

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SubordinationState",
    "DensityEstimate",
    "ConvolutionTransform",
    "solve_at_point",
    "solve_on_grid",
    "recover_density",
    "detect_atoms",
    "r_transform_eval",
    "check_r_additivity",
    "free_convolve",
    "default_y_start",
    "write_states_csv",
]


@dataclass(frozen=True)
class SolverConfig:
    """Continuation schedule, damping, tolerances and grid parameters.

    ``y_start=None`` means ``8 * (1 + R)`` with ``R`` the largest support
    radius of the two inputs. ``lambda_grid=None`` lets :func:`free_convolve`
    size a uniform grid of ``grid_points`` points over the sum of the input
    supports widened by ``margin`` times its width on each side.
    """

    y_start: float = None
    y_target: float = 1e-3
    continuation_factor: float = 0.7
    damping: float = 0.5
    min_damping: float = 1.0 / 16.0
    tol: float = 1e-12
    max_iter: int = 10000
    lambda_grid: tuple = None
    grid_points: int = 400
    margin: float = 0.25
    newton: bool = True
    refine: bool = True
    refine_tol: float = 2e-6
    max_points: int = 6000
    atom_threshold: float = 0.01
    atom_epsilons: tuple = (1e-3, 5e-4, 2.5e-4)
    richardson: bool = False

    def __post_init__(self):
        if self.y_start is not None and not self.y_start > 0:
            raise DomainError("y_start must be positive")
        if not self.y_target > 0:
            raise DomainError("y_target must be positive")
        if not 0 < self.continuation_factor < 1:
            raise DomainError("continuation_factor must lie in (0, 1)")
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if not 0 < self.min_damping <= self.damping:
            raise DomainError("min_damping must lie in (0, damping]")
        if not self.tol > 0 or self.max_iter < 1:
            raise DomainError("tol must be positive and max_iter >= 1")
        if self.grid_points < 2:
            raise DomainError("grid_points must be >= 2")
        if self.lambda_grid is not None:
            object.__setattr__(self, "lambda_grid", tuple(check_lambda_grid(self.lambda_grid)))

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class SubordinationState:
    """Solution ``(f, Δ1, Δ2)`` of the subordination system at one point ``z``."""

    z: complex
    f: complex
    delta1: complex
    delta2: complex
    residual: float
    iterations: int

    @property
    def omega1(self):
        return self.z - self.delta2 / self.f

    @property
    def omega2(self):
        return self.z - self.delta1 / self.f


@dataclass
class DensityEstimate:
    """Absolutely continuous density on a λ-grid plus detected atoms.

    ``rho`` is the Poisson-smoothed density ``Im f(λ + iε) / π`` with the
    Lorentzian contribution of every detected atom removed.
    """

    lambdas: np.ndarray
    rho: np.ndarray
    atoms: list = field(default_factory=list)
    epsilon_used: float = 1e-3

    def continuous_mass(self):
        return float(np.trapezoid(self.rho, self.lambdas))

    def atom_mass(self):
        return float(sum(m for _, m in self.atoms))

    def total_mass(self):
        return self.continuous_mass() + self.atom_mass()

    def moment(self, k):
        """``k``-th moment of the estimate, normalized by its total mass."""
        num = np.trapezoid(self.lambdas**k * self.rho, self.lambdas)
        num += sum(m * x**k for x, m in self.atoms)
        return float(num / self.total_mass())

    def density(self, x):
        return np.interp(x, self.lambdas, self.rho, left=0.0, right=0.0)

    def cdf(self, x):
        """Distribution function of the estimate, normalized to total mass one."""
        x = np.asarray(x, dtype=float)
        h = np.diff(self.lambdas)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (self.rho[:-1] + self.rho[1:]))])
        out = np.interp(x, self.lambdas, cum, left=0.0, right=cum[-1])
        for pos, mass in self.atoms:
            out = out + mass * (x >= pos)
        return out / self.total_mass()

    def mass_outside(self, lo, hi):
        inside = (self.lambdas >= lo) & (self.lambdas <= hi)
        lam, rho = self.lambdas, self.rho
        total = np.trapezoid(rho, lam)
        sub = np.trapezoid(np.where(inside, rho, 0.0), lam)
        atoms_out = sum(m for x, m in self.atoms if not lo <= x <= hi)
        return float(total - sub + atoms_out)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# epsilon_used,{self.epsilon_used!r}\n")
            for pos, mass in self.atoms:
                fh.write(f"# atom,{pos!r},{mass!r}\n")
            writer = csv.writer(fh)
            writer.writerow(["lambda", "rho"])
            for lam, rho in zip(self.lambdas, self.rho):
                writer.writerow([repr(float(lam)), repr(float(rho))])

    @classmethod
    def from_csv(cls, path):
        atoms, eps, lam, rho = [], None, [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = [p.strip() for p in line[1:].split(",")]
                    if parts[0] == "atom":
                        atoms.append((float(parts[1]), float(parts[2])))
                    elif parts[0] == "epsilon_used":
                        eps = float(parts[1])
                    continue
                if line.startswith("lambda"):
                    continue
                a, b = line.split(",")
                lam.append(float(a))
                rho.append(float(b))
        return cls(np.array(lam), np.array(rho), atoms, eps)


# -- transforms ------------------------------------------------------------


class _Transform:
    """Uniform vectorized access to a Stieltjes transform and its derivative."""

    def __init__(self, obj):
        self.obj = obj
        self.measure = obj if isinstance(obj, Measure) else None
        self.point = None
        if isinstance(obj, Atoms) and obj.is_point_mass:
            self.point = float(obj.points[0])

    def value(self, w):
        if self.measure is not None:
            return self.measure._stieltjes(w)
        return np.asarray(self.obj(w), dtype=complex) * np.ones_like(w)

    def deriv(self, w):
        if self.measure is not None:
            return self.measure._stieltjes_derivative(w)
        d = getattr(self.obj, "derivative", None)
        if d is not None:
            return np.asarray(d(w), dtype=complex) * np.ones_like(w)
        h = 1e-4 * np.abs(w.imag)
        return (self.value(w + h) - self.value(w - h)) / (2 * h)


def _state_arrays(t1, t2, z, omega1):
    """Rebuild ``(f, Δ1, Δ2)`` and the residual from ``ω1``."""
    fa = t1.value(omega1)
    omega2 = z - 1.0 / fa - omega1
    fb = t2.value(omega2)
    f = 0.5 * (fa + fb)
    d2 = (z - omega1) * f
    d1 = (z - omega2) * f
    gap = 1.0 + z * f - d1 - d2
    d1 = d1 + 0.5 * gap
    d2 = d2 + 0.5 * gap
    res = _residual(t1, t2, z, f, d1, d2)
    return f, d1, d2, res


def _residual(t1, t2, z, f, d1, d2):
    r1 = np.abs(f - t1.value(z - d2 / f))
    r2 = np.abs(f - t2.value(z - d1 / f))
    r3 = np.abs(f + (1.0 - d1 - d2) / z)
    return np.maximum(np.maximum(r1, r2), r3) / np.maximum(1.0, np.abs(f))


def _shortcut(t1, t2, z):
    """Exact state when one input is a point mass (rigid shift)."""
    if t2.point is not None:
        c = t2.point
        f = t1.value(z - c)
        d2 = c * f
        d1 = 1.0 + z * f - d2
    else:
        c = t1.point
        f = t2.value(z - c)
        d1 = c * f
        d2 = 1.0 + z * f - d1
    return f, d1, d2


def _g_and_slope(t1, t2, z, omega1):
    fa = t1.value(omega1)
    omega2 = z - 1.0 / fa - omega1
    fb = t2.value(omega2)
    g = omega1 - (z - 1.0 / fb - omega2)
    return g, fa, fb, omega2


def _iterate(t1, t2, z, omega1, cfg, iterations=None):
    """Solve for ``ω1`` at every entry of ``z``; returns arrays and a mask."""
    z = np.asarray(z, dtype=complex)
    omega1 = np.array(omega1, dtype=complex)
    iters = np.zeros(z.shape, dtype=int) if iterations is None else iterations.copy()
    f, d1, d2, res = _state_arrays(t1, t2, z, omega1)
    done = res <= cfg.tol
    theta = np.full(z.shape, cfg.damping)
    best_res = res.copy()
    floor = np.abs(z.imag) * (1.0 - 1e-12)
    count = 0
    while not np.all(done) and count < cfg.max_iter:
        count += 1
        act = np.flatnonzero(~done)
        za, wa = z[act], omega1[act]
        g, fa, fb, w2 = _g_and_slope(t1, t2, za, wa)
        new = wa - theta[act] * g
        if cfg.newton:
            h1p = t1.deriv(wa) / fa**2 - 1.0
            h2p = t2.deriv(w2) / fb**2 - 1.0
            slope = 1.0 - h2p * h1p
            with np.errstate(all="ignore"):
                cand = wa - g / slope
                gc, fac, _, w2c = _g_and_slope(t1, t2, za, cand)
            ok = (
                np.isfinite(cand)
                & np.isfinite(gc)
                & (cand.imag >= floor[act])
                & (w2c.imag >= floor[act])
                & (np.abs(gc) < np.abs(g))
            )
            new = np.where(ok, cand, new)
        omega1[act] = new
        fs, d1s, d2s, rs = _state_arrays(t1, t2, za, new)
        f[act], d1[act], d2[act] = fs, d1s, d2s
        worse = rs > res[act]
        theta[act] = np.where(worse, np.maximum(theta[act] / 2, cfg.min_damping), cfg.damping)
        res[act] = rs
        iters[act] += 1
        best_res[act] = np.minimum(best_res[act], rs)
        done[act] = rs <= cfg.tol
    return omega1, f, d1, d2, res, iters, done


def default_y_start(n1, n2, lambdas=()):
    r = max(_radius(n1), _radius(n2))
    y = 8.0 * (1.0 + r)
    if len(lambdas):
        y = max(y, float(np.max(np.abs(lambdas))))
    return y


def _radius(m):
    if isinstance(m, Measure):
        return m.radius()
    return float(getattr(m, "radius", lambda: 1.0)())


def _y_schedule(y_start, y_target, factor, extra=()):
    ys = [y_start]
    while ys[-1] * factor > y_target:
        ys.append(ys[-1] * factor)
    ys.append(y_target)
    ys.extend(y for y in extra if y < y_target)
    ys = sorted(set(ys), reverse=True)
    return ys


def _continue(t1, t2, lambdas, y_targets, cfg, y_start):
    """Run vertical continuation for every λ; record states at ``y_targets``.

    Returns ``{y: (z, f, d1, d2, res, iters)}``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    y_targets = sorted(set(float(y) for y in y_targets), reverse=True)
    top = max(y_targets[0], y_start)
    schedule = _y_schedule(top, y_targets[0], cfg.continuation_factor, y_targets[1:])
    out = {}
    if t1.point is not None or t2.point is not None:
        for y in y_targets:
            z = lambdas + 1j * y
            f, d1, d2 = _shortcut(t1, t2, z)
            res = _residual(t1, t2, z, f, d1, d2)
            out[y] = (z, f, d1, d2, res, np.zeros(z.shape, dtype=int))
        return out
    omega1 = lambdas + 1j * schedule[0]
    prev_y = schedule[0]
    iters = np.zeros(lambdas.shape, dtype=int)
    for step, y in enumerate(schedule):
        z = lambdas + 1j * y
        omega1 = omega1 + 1j * (y - prev_y)
        omega1, f, d1, d2, res, iters, done = _iterate(t1, t2, z, omega1, cfg, iters)
        if step == 0:
            big = max(np.max(np.abs(d1)), np.max(np.abs(d2)))
            if big > 0.1:
                raise _StartTooLow(big)
        if not np.all(done):
            bad = int(np.flatnonzero(~done)[0])
            state = SubordinationState(
                complex(z[bad]), complex(f[bad]), complex(d1[bad]), complex(d2[bad]),
                float(res[bad]), int(iters[bad]),
            )
            raise ConvergenceError(
                f"subordination iteration failed at lambda={lambdas[bad]:.6g}, y={y:.3g} "
                f"(residual {res[bad]:.3g} > tol {cfg.tol:.1g})",
                best_state=state, lam=float(lambdas[bad]), y=float(y),
            )
        if y in y_targets:
            out[y] = (z, f, d1, d2, res, iters.copy())
        prev_y = y
    return out


class _StartTooLow(Exception):
    pass


def _run_rays(n1, n2, lambdas, y_targets, cfg):
    t1, t2 = _Transform(n1), _Transform(n2)
    y_start = cfg.y_start or default_y_start(n1, n2, lambdas)
    for _ in range(12):
        try:
            return _continue(t1, t2, lambdas, y_targets, cfg, y_start)
        except _StartTooLow as exc:
            logger.info("raising y_start from %g (|Δ| = %.3g at start)", y_start, exc.args[0])
            y_start *= 2.0
    raise ConvergenceError("could not find a starting height with small Δ")


def _to_states(z, f, d1, d2, res, iters):
    return [
        SubordinationState(complex(a), complex(b), complex(c), complex(d), float(e), int(k))
        for a, b, c, d, e, k in zip(z, f, d1, d2, res, iters)
    ]


# -- public operations ------------------------------------------------------


def solve_at_point(f1, f2, z, init=None, cfg=None):
    """Solve the subordination system at a single point ``z`` with ``Im z > 0``.

    ``f1`` and ``f2`` are measures or callables returning Stieltjes transforms.
    Without ``init`` the iteration starts from ``f = -1/z``, ``Δ1 = Δ2 = 0``.
    """
    cfg = cfg or SolverConfig()
    z = complex(check_spectral_points(z, upper=True))
    t1, t2 = _Transform(f1), _Transform(f2)
    zz = np.array([z])
    if t1.point is not None or t2.point is not None:
        f, d1, d2 = _shortcut(t1, t2, zz)
        res = _residual(t1, t2, zz, f, d1, d2)
        return _to_states(zz, f, d1, d2, res, [0])[0]
    omega1 = np.array([z if init is None else init.omega1])
    omega1, f, d1, d2, res, iters, done = _iterate(t1, t2, zz, omega1, cfg)
    state = _to_states(zz, f, d1, d2, res, iters)[0]
    if not done[0]:
        raise ConvergenceError(
            f"no convergence at z={z} after {cfg.max_iter} iterations "
            f"(residual {state.residual:.3g})",
            best_state=state, lam=z.real, y=z.imag,
        )
    return state


def solve_on_grid(n1, n2, cfg):
    """Solve along vertical rays down to ``Im z = cfg.y_target`` for each λ."""
    if cfg.lambda_grid is None:
        raise DomainError("solve_on_grid needs cfg.lambda_grid")
    lambdas = np.asarray(cfg.lambda_grid)
    out = _run_rays(n1, n2, lambdas, [cfg.y_target], cfg)
    return _to_states(*out[cfg.y_target])


def _smoothed_rho(states_f, eps, lambdas, atoms):
    rho = states_f.imag / math.pi
    for pos, mass in atoms:
        rho = rho - mass * eps / (math.pi * ((lambdas - pos) ** 2 + eps**2))
    return np.clip(rho, 0.0, None)


def recover_density(states, atoms=()):
    """Density ``Im f(λ + iε) / π`` from states sharing one ``ε``.

    Lorentzian profiles of the given ``atoms`` are subtracted before clipping
    at zero. No mass renormalization is applied.
    """
    if not states:
        raise DomainError("no states given")
    zs = np.array([s.z for s in states])
    eps = zs.imag
    if np.any(np.abs(eps - eps[0]) > 1e-14 * max(1.0, eps[0])):
        raise DomainError("states have mixed imaginary parts")
    lambdas = check_lambda_grid(zs.real)
    f = np.array([s.f for s in states])
    rho = _smoothed_rho(f, eps[0], lambdas, atoms)
    return DensityEstimate(lambdas, rho, list(atoms), float(eps[0]))


def _extrapolate_to_zero(eps, values):
    """Value at ε = 0 of the polynomial through ``(eps, values)``."""
    eps = np.asarray(eps, dtype=float)
    total = 0.0
    for i, (ei, vi) in enumerate(zip(eps, values)):
        w = 1.0
        for j, ej in enumerate(eps):
            if j != i:
                w *= ej / (ej - ei)
        total += w * vi
    return total


def detect_atoms(n1, n2, candidates, cfg=None):
    """Atoms of ``n1 ⊞ n2`` among ``candidates``.

    The mass at ``λ0`` is ``lim ε Im f(λ0 + iε)``, extrapolated from
    ``cfg.atom_epsilons``; masses above ``cfg.atom_threshold`` are reported.
    """
    cfg = cfg or SolverConfig()
    cand = np.unique(np.asarray(candidates, dtype=float))
    if cand.size == 0:
        return []
    if not np.all(np.isfinite(cand)):
        raise DomainError("atom candidates must be finite")
    epss = sorted(cfg.atom_epsilons, reverse=True)
    out = _run_rays(n1, n2, cand, epss, cfg)
    samples = np.array([e * out[e][1].imag for e in epss])
    atoms = []
    for k, lam in enumerate(cand):
        mass = _extrapolate_to_zero(epss, samples[:, k])
        if mass > cfg.atom_threshold:
            atoms.append((float(lam), float(min(mass, 1.0))))
    return atoms


def _atom_candidates(n1, n2):
    if not (isinstance(n1, Atoms) and isinstance(n2, Atoms)):
        return []
    out = []
    for x1, w1 in zip(n1.points, n1.weights):
        for x2, w2 in zip(n2.points, n2.weights):
            if w1 + w2 > 1.0:
                out.append(x1 + x2)
    return out


def _auto_grid(n1, n2, cfg):
    a1, b1 = n1.support()
    a2, b2 = n2.support()
    lo, hi = a1 + a2, b1 + b2
    width = hi - lo
    pad = cfg.margin * width if width > 0 else 1.0
    return np.linspace(lo - pad, hi + pad, cfg.grid_points)


def _refine_points(lam, rho, eps, cfg, budget):
    """Midpoints of intervals whose trapezoid contribution is poorly resolved."""
    h = np.diff(lam)
    jump = np.abs(np.diff(rho)) * h
    flag = (jump > cfg.refine_tol) & (h > eps / 8)
    idx = np.flatnonzero(flag)
    if idx.size > budget:
        idx = idx[np.argsort(jump[idx])[::-1][:budget]]
    return 0.5 * (lam[idx] + lam[idx + 1])


def free_convolve(n1, n2, cfg=None):
    """Density and atoms of the free additive convolution ``n1 ⊞ n2``."""
    cfg = cfg or SolverConfig()
    eps = cfg.y_target
    if cfg.lambda_grid is not None:
        lam = np.asarray(cfg.lambda_grid)
    else:
        lam = _auto_grid(n1, n2, cfg)
    if isinstance(n1, Atoms) and isinstance(n2, Atoms) and n1.is_point_mass and n2.is_point_mass:
        c = float(n1.points[0] + n2.points[0])
        return DensityEstimate(lam, np.zeros_like(lam), [(c, 1.0)], eps)

    f = _run_rays(n1, n2, lam, [eps], cfg)[eps][1]
    raw = eps * f.imag
    peaks = [
        lam[i] for i in range(1, lam.size - 1)
        if raw[i] > cfg.atom_threshold / 2 and raw[i] >= raw[i - 1] and raw[i] >= raw[i + 1]
    ]
    atoms = detect_atoms(n1, n2, _atom_candidates(n1, n2) + peaks, cfg)
    rho = _smoothed_rho(f, eps, lam, atoms)

    if cfg.refine and cfg.lambda_grid is None:
        for _ in range(30):
            new = _refine_points(lam, rho, eps, cfg, cfg.max_points - lam.size)
            if new.size == 0:
                break
            fn = _run_rays(n1, n2, new, [eps], cfg)[eps][1]
            lam = np.concatenate([lam, new])
            f = np.concatenate([f, fn])
            order = np.argsort(lam)
            lam, f = lam[order], f[order]
            rho = _smoothed_rho(f, eps, lam, atoms)

    if cfg.richardson:
        half = eps / 2
        fh = _run_rays(n1, n2, lam, [half], cfg)[half][1]
        rho_h = _smoothed_rho(fh, half, lam, atoms)
        rho = np.clip(2.0 * rho_h - rho, 0.0, None)
    return DensityEstimate(lam, rho, atoms, eps)


# -- R-transform --------------------------------------------------------------


class ConvolutionTransform:
    """Stieltjes transform of ``n1 ⊞ n2`` evaluated by solving at each point.

    Intended for points well inside the upper half plane, where no
    continuation is needed. Exposes an exact derivative obtained by
    differentiating the subordination fixed point implicitly.
    """

    def __init__(self, n1, n2, cfg=None):
        self.n1, self.n2 = n1, n2
        self.cfg = cfg or SolverConfig()
        self._t1, self._t2 = _Transform(n1), _Transform(n2)

    def radius(self):
        return _radius(self.n1) + _radius(self.n2)

    def _solve(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        flip = z.imag < 0
        zu = np.where(flip, np.conj(z), z)
        if self._t1.point is not None or self._t2.point is not None:
            f, d1, d2 = _shortcut(self._t1, self._t2, zu)
            omega1 = zu - d2 / f
            done = np.ones(z.shape, dtype=bool)
        else:
            omega1, f, d1, d2, res, _, done = _iterate(self._t1, self._t2, zu, zu.copy(), self.cfg)
        if not np.all(done):
            raise ConvergenceError("subordination solve failed for R-transform evaluation")
        return zu, omega1, f, flip

    def __call__(self, z):
        _, _, f, flip = self._solve(z)
        return np.where(flip, np.conj(f), f)

    def derivative(self, z):
        zu, omega1, _, flip = self._solve(z)
        t1, t2 = self._t1, self._t2
        fa = t1.value(omega1)
        omega2 = zu - 1.0 / fa - omega1
        fb = t2.value(omega2)
        h1p = t1.deriv(omega1) / fa**2 - 1.0
        h2p = t2.deriv(omega2) / fb**2 - 1.0
        domega1 = (1.0 + h2p) / (1.0 - h2p * h1p)
        d = t1.deriv(omega1) * domega1
        return np.where(flip, np.conj(d), d)


def r_transform_eval(m, s, tol=1e-14, max_iter=100):
    """R-transform ``R(s) = -1/s - z(s)``, where ``z(s)`` inverts the transform.

    ``m`` is a measure or a callable transform (optionally with a
    ``derivative`` attribute). Newton's method starts at ``z = -1/s``.
    """
    s = complex(s)
    if s == 0 or s.imag == 0:
        raise DomainError("R-transform argument must have nonzero imaginary part")
    t = _Transform(m)
    z = np.array([-1.0 / s])
    for k in range(max_iter):
        val = t.value(z)[0]
        err = val - s
        if abs(err) <= tol * abs(s):
            return -1.0 / s - complex(z[0])
        step = err / t.deriv(z)[0]
        znew = z - step
        if not np.isfinite(znew[0]) or znew[0].imag * s.imag <= 0:
            raise ConvergenceError(
                f"Newton inversion left the half plane at step {k} (z={z[0]}, s={s})",
                best_state=complex(z[0]),
            )
        z = znew
    raise ConvergenceError(
        f"Newton inversion did not converge for s={s} (|f(z)-s|={abs(err):.3g})",
        best_state=complex(z[0]),
    )


def check_r_additivity(n1, n2, s_points, cfg=None):
    """Max over ``s_points`` of ``|R_N(s) - R_1(s) - R_2(s)|`` for ``N = n1 ⊞ n2``."""
    conv = ConvolutionTransform(n1, n2, cfg)
    worst = 0.0
    for s in np.atleast_1d(s_points):
        d = r_transform_eval(conv, s) - r_transform_eval(n1, s) - r_transform_eval(n2, s)
        worst = max(worst, abs(d))
    return worst


def write_states_csv(states, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "y", "f_re", "f_im", "d1_re", "d1_im", "d2_re", "d2_im",
                         "residual", "iters"])
        for s in states:
            writer.writerow([
                repr(s.z.real), repr(s.z.imag), repr(s.f.real), repr(s.f.imag),
                repr(s.delta1.real), repr(s.delta1.imag), repr(s.delta2.real),
                repr(s.delta2.imag), repr(s.residual), s.iterations,
            ])
