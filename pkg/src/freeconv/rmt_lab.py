"""Monte Carlo experiments with ``A + U* B U`` for Haar-distributed ``U``.

Every estimator takes a root ``seed``; trial ``k`` draws from its own
substream ``SeedSequence(seed, spawn_key=(k,))``, so results are
reproducible bit-for-bit and independent of how trials are scheduled
across threads.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .validation import check_dimension, check_hermitian, check_spectral_points

__all__ = [
    "SpectrumSample",
    "VarianceReport",
    "trial_seed",
    "haar_unitary",
    "diag_from_measure",
    "rotate_sum_spectrum",
    "sample_spectra",
    "empirical_ncm",
    "averaged_cdf",
    "ks_distance",
    "ks_two_sample",
    "estimate_resolvent_variance",
    "freeness_moment",
    "unitary_spectrum_check",
    "default_threads",
    "traceless_sign_diagonal",
]


@dataclass
class SpectrumSample:
    """Sorted eigenvalues of one draw, with the seed that produced it."""

    eigenvalues: np.ndarray
    seed: int

    def __post_init__(self):
        self.eigenvalues = np.sort(np.asarray(self.eigenvalues, dtype=float))

    @property
    def n(self):
        return self.eigenvalues.size


@dataclass
class VarianceReport:
    """Variances of ``n⁻¹ Tr G`` and ``n⁻¹ Tr H2 G`` across matrix sizes.

    Slopes are least-squares fits of log variance against log n; they are
    ``nan`` when the statistic is deterministic (``degenerate``).
    """

    ns: np.ndarray
    variances: np.ndarray
    fitted_slope: float
    z: complex
    trials: int
    delta_variances: np.ndarray = None
    delta_slope: float = math.nan
    degenerate: bool = False


def default_threads():
    env = os.environ.get("FREECONV_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_trials(fn, count, threads):
    threads = 1 if threads is None else threads
    if threads <= 1 or count <= 1:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def trial_seed(seed, k):
    """64-bit seed of substream ``k`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(k),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def haar_unitary(n, seed):
    """Haar-distributed ``n x n`` unitary matrix.

    QR-decomposes a matrix of independent standard complex Gaussians and
    rescales each column of ``Q`` by the phase of the matching diagonal
    entry of ``R``; without that correction ``Q`` is not Haar distributed.
    """
    n = check_dimension(n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    phase = d / np.abs(d)
    return q * phase


def diag_from_measure(m, n):
    """Diagonal matrix of the quantiles ``m⁻¹((i - 1/2) / n)``, ``i = 1..n``."""
    n = check_dimension(n)
    p = (np.arange(1, n + 1) - 0.5) / n
    q = m.quantile(p)
    if not np.all(np.isfinite(q)):
        raise DomainError("measure has unbounded quantiles")
    return np.diag(np.atleast_1d(q).astype(float))


def _diagonal_or_none(a):
    d = np.diagonal(a)
    if np.count_nonzero(a - np.diag(d)) == 0:
        return d.real
    return None


def _rotated(b, u):
    """``U* B U``; exact when ``B`` is a multiple of the identity."""
    db = _diagonal_or_none(b)
    if db is not None and np.all(db == db[0]):
        return b.astype(complex)
    uh = u.conj().T
    if db is not None:
        return (uh * db) @ u
    return uh @ b @ u


def _hermitian_sum(a, b, seed):
    a = check_hermitian(a)
    b = check_hermitian(b)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    u = haar_unitary(a.shape[0], seed)
    h2 = _rotated(b, u)
    h = a + h2
    return 0.5 * (h + h.conj().T), h2


def rotate_sum_spectrum(a, b, seed):
    """Eigenvalues of ``A + U* B U`` with ``U = haar_unitary(n, seed)``."""
    h, _ = _hermitian_sum(a, b, seed)
    return SpectrumSample(np.linalg.eigvalsh(h), int(seed))


def sample_spectra(n1, n2, n, trials, seed, threads=1):
    """Spectra of ``trials`` independent draws with quantile-diagonal inputs."""
    a = diag_from_measure(n1, n)
    b = diag_from_measure(n2, n)
    return _map_trials(lambda k: rotate_sum_spectrum(a, b, trial_seed(seed, k)), trials, threads)


def empirical_ncm(samples, bins):
    """Mass per bin ``[e_i, e_{i+1})`` of the averaged counting measures."""
    if not samples:
        raise DomainError("no samples")
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("bins must be >= 2 strictly increasing edges")
    total = np.zeros(edges.size - 1)
    for s in samples:
        idx = np.searchsorted(edges, s.eigenvalues, side="right") - 1
        ok = (idx >= 0) & (idx < edges.size - 1)
        total += np.bincount(idx[ok], minlength=edges.size - 1) / s.n
    return total / len(samples)


def averaged_cdf(samples, x):
    pooled = np.sort(np.concatenate([s.eigenvalues for s in samples]))
    return np.searchsorted(pooled, x, side="right") / pooled.size


def ks_distance(samples, cdf):
    """Sup distance between the averaged empirical CDF and ``cdf``."""
    pooled = np.sort(np.concatenate([s.eigenvalues for s in samples]))
    size = pooled.size
    f = np.asarray(cdf(pooled), dtype=float)
    upper = np.searchsorted(pooled, pooled, side="right") / size
    lower = np.searchsorted(pooled, pooled, side="left") / size
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(lower - f))))


def ks_two_sample(x, y):
    x, y = np.sort(x), np.sort(y)
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def _resolvent_traces(a, b, z, seed):
    """``(n⁻¹ Tr G, n⁻¹ Tr H2 G)`` for ``H = A + U* B U``, ``G = (H - z)⁻¹``."""
    h, h2 = _hermitian_sum(a, b, seed)
    n = h.shape[0]
    w, v = np.linalg.eigh(h)
    inv = 1.0 / (w - z)
    g = inv.sum() / n
    da = _diagonal_or_none(a)
    if da is not None:
        weights = da @ (np.abs(v) ** 2)
    else:
        weights = np.einsum("ik,ij,jk->k", v.conj(), a, v).real
    delta1 = (weights * inv).sum() / n
    return g, 1.0 + z * g - delta1


def _loglog_slope(ns, var):
    return float(np.polyfit(np.log(ns), np.log(var), 1)[0])


def estimate_resolvent_variance(n1, n2, z, ns, trials, seed, threads=1):
    """Variance decay of ``g_n(z)`` and ``δ_{2,n}(z)`` with matrix size."""
    z = complex(check_spectral_points(z, upper=True))
    if z.imag < 1:
        raise DomainError("variance estimates need Im z >= 1")
    if trials < 50:
        raise DomainError("need at least 50 trials")
    ns = np.asarray(ns, dtype=int)
    if ns.ndim != 1 or ns.size < 2 or np.any(np.diff(ns) <= 0) or ns[0] < 1:
        raise DomainError("ns must be >= 2 strictly increasing sizes")
    var_g, var_d = [], []
    for j, n in enumerate(ns):
        a = diag_from_measure(n1, int(n))
        b = diag_from_measure(n2, int(n))
        root = trial_seed(seed, j)
        vals = _map_trials(lambda k: _resolvent_traces(a, b, z, trial_seed(root, k)), trials, threads)
        gs = np.array([v[0] for v in vals])
        ds = np.array([v[1] for v in vals])
        # centring on one sample keeps a constant statistic at exactly zero
        var_g.append(np.var(gs - gs[0], ddof=1))
        var_d.append(np.var(ds - ds[0], ddof=1))
    var_g, var_d = np.array(var_g), np.array(var_d)
    degenerate = bool(np.any(var_g <= 0) or np.any(var_d <= 0))
    if degenerate:
        slope_g = slope_d = math.nan
    else:
        slope_g, slope_d = _loglog_slope(ns, var_g), _loglog_slope(ns, var_d)
    return VarianceReport(ns, var_g, slope_g, z, trials, var_d, slope_d, degenerate)


def _upow(u, m):
    if m >= 0:
        return np.linalg.matrix_power(u, m)
    return np.linalg.matrix_power(u.conj().T, -m)


def freeness_moment(n, ms, ts, trials, seed, *, allow_nonzero_sum=False,
                    require_traceless=True, threads=1):
    """Monte Carlo mean of ``n⁻¹ Tr(U^{m1} T1 ... U^{mk} Tk)`` over Haar ``U``."""
    n = check_dimension(n)
    ms = [int(m) for m in ms]
    if len(ms) != len(ts) or not ms:
        raise DomainError("need one matrix per exponent")
    if any(m == 0 for m in ms):
        raise DomainError("exponents must be nonzero")
    if sum(ms) != 0 and not allow_nonzero_sum:
        raise DomainError("exponents must sum to zero")
    ts = [np.asarray(t, dtype=complex) for t in ts]
    for t in ts:
        if t.shape != (n, n):
            raise DomainError(f"matrix of shape {t.shape}, expected {(n, n)}")
        if require_traceless and abs(np.trace(t)) / n > 1e-12:
            raise DomainError("matrices must have zero normalized trace")

    def one(k):
        u = haar_unitary(n, trial_seed(seed, k))
        prod = np.eye(n, dtype=complex)
        for m, t in zip(ms, ts):
            prod = prod @ _upow(u, m) @ t
        return np.trace(prod) / n

    return complex(np.mean(_map_trials(one, trials, threads)))


def unitary_spectrum_check(n, z, trials, seed, threads=1):
    """Monte Carlo mean of ``n⁻¹ Tr (U - z)⁻¹`` for Haar ``U``."""
    n = check_dimension(n)
    z = complex(z)
    if 0.9 <= abs(z) <= 1.1:
        raise DomainError("z is too close to the unit circle")

    def one(k):
        ev = np.linalg.eigvals(haar_unitary(n, trial_seed(seed, k)))
        return np.mean(1.0 / (ev - z))

    return complex(np.mean(_map_trials(one, trials, threads)))


def traceless_sign_diagonal(n, period=1):
    """``diag(+1, ..., -1, ...)`` alternating in blocks of ``period``."""
    n = check_dimension(n, minimum=2)
    if n % (2 * period):
        raise DomainError("n must be a multiple of 2 * period")
    signs = np.where((np.arange(n) // period) % 2 == 0, 1.0, -1.0)
    return np.diag(signs)
