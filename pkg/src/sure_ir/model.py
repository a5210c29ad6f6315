"""Complex-sinusoid signal model and parametric Vandermonde dictionary.

The observation model is a mixture of K complex sinusoids sampled at
integer times m = 1..T,

    y_m = sum_k alpha_k * exp(-1j * omega_k * m) + w_m,

from which M samples are retained at known indices.  The dictionary is
parameterized by a frequency vector theta; each column (atom) is a sampled
complex exponential, so refining theta moves atoms continuously over the
frequency torus [0, 2*pi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_frequency(omega):
    """Wrap an angular frequency (scalar or array) into [0, 2*pi)."""
    return np.mod(omega, TWO_PI)


def circular_distance(a, b):
    """Shortest angular distance |a - b| on the frequency torus."""
    d = np.mod(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def _check_indices(indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ValueError("sample index set must be nonempty")
    if np.any(idx < 1):
        raise ValueError("sample indices are 1-based and must be >= 1")
    if np.unique(idx).size != idx.size:
        raise ValueError("sample indices must be distinct")
    return idx


def atom(omega: float, indices) -> np.ndarray:
    """Sampled complex exponential a(omega), entries exp(-1j*omega*m).

    Parameters
    ----------
    omega : float
        Angular frequency in radians.
    indices : array_like of int
        Retained 1-based sample indices.
    """
    idx = _check_indices(indices)
    return np.exp(-1j * float(omega) * idx.astype(float))


def atom_derivative(omega: float, indices) -> np.ndarray:
    """Derivative of :func:`atom` with respect to omega.

    Entry for sample index m is (-1j*m) * exp(-1j*omega*m).
    """
    idx = _check_indices(indices)
    m = idx.astype(float)
    return (-1j * m) * np.exp(-1j * float(omega) * m)


def atoms_matrix(theta, indices) -> np.ndarray:
    """Stack atoms for every frequency in ``theta`` into an M x N matrix."""
    idx = _check_indices(indices)
    th = np.asarray(theta, dtype=float).ravel()
    return np.exp(-1j * np.outer(idx.astype(float), th))


def uniform_grid(n: int) -> np.ndarray:
    """Initial frequency grid (2*pi/n) * [0, 1, ..., n-1]."""
    if n < 1:
        raise ValueError("grid size must be a positive integer")
    return TWO_PI * np.arange(int(n), dtype=float) / int(n)


@dataclass
class ParametricDictionary:
    """Frequency-parameterized dictionary restricted to a sample-index set.

    Attributes
    ----------
    theta : np.ndarray
        Frequency of each atom, radians in [0, 2*pi).
    sample_indices : np.ndarray
        Strictly increasing 1-based indices of the retained samples.
    t : int
        Total length of the underlying signal.
    """

    theta: np.ndarray
    sample_indices: np.ndarray
    t: int

    @property
    def n_atoms(self) -> int:
        return int(self.theta.size)

    @property
    def n_samples(self) -> int:
        return int(self.sample_indices.size)

    def matrix(self) -> np.ndarray:
        """The M x N atom matrix A(theta)."""
        return atoms_matrix(self.theta, self.sample_indices)

    def derivative_matrix(self) -> np.ndarray:
        """Columnwise derivative dA/dtheta_n, same shape as :meth:`matrix`."""
        m = self.sample_indices.astype(float)
        return (-1j * m)[:, None] * self.matrix()


def build_dictionary(theta, indices, t: int | None = None) -> ParametricDictionary:
    """Build a :class:`ParametricDictionary` from frequencies and indices.

    ``t`` defaults to the largest retained index.  Duplicate indices are
    rejected; duplicate frequencies are permitted (they produce identical
    columns and a rank-deficient dictionary).
    """
    th = wrap_frequency(np.asarray(theta, dtype=float).ravel())
    if th.size == 0:
        raise ValueError("theta must contain at least one frequency")
    idx = np.sort(_check_indices(indices))
    total = int(idx.max()) if t is None else int(t)
    if total < int(idx.max()):
        raise ValueError("t must cover every sample index")
    return ParametricDictionary(theta=th, sample_indices=idx, t=total)


def synthesize(freqs, amps, t: int) -> np.ndarray:
    """Noiseless mixture sum_k amps_k * exp(-1j*freqs_k*m) for m = 1..t."""
    f = np.asarray(freqs, dtype=float).ravel()
    a = np.asarray(amps, dtype=complex).ravel()
    if f.size != a.size:
        raise ValueError("freqs and amps must have equal length")
    if t < 1:
        raise ValueError("signal length must be positive")
    m = np.arange(1, int(t) + 1, dtype=float)
    if f.size == 0:
        return np.zeros(int(t), dtype=complex)
    return np.exp(-1j * np.outer(m, f)) @ a


@dataclass
class SpectralInstance:
    """A randomized problem instance with its ground truth.

    ``full_signal`` is the length-T noisy record; ``observations`` is its
    restriction to ``sample_indices``.  ``noise_variance`` is the total
    variance sigma^2 of the circular complex Gaussian noise.
    """

    true_freqs: np.ndarray
    true_amps: np.ndarray
    full_signal: np.ndarray
    observations: np.ndarray
    sample_indices: np.ndarray
    noise_variance: float
    seed: int
    t: int = field(default=0)

    def __post_init__(self):
        if self.t == 0:
            self.t = int(self.full_signal.size)

    @property
    def k(self) -> int:
        return int(self.true_freqs.size)

    @property
    def m(self) -> int:
        return int(self.sample_indices.size)


def psnr_to_noise_variance(psnr_db) -> float:
    """Noise variance sigma^2 = 10**(-psnr_db/10); infinite PSNR gives 0."""
    if psnr_db is None or np.isinf(psnr_db):
        return 0.0
    return float(10.0 ** (-float(psnr_db) / 10.0))


def instance_from_freqs(freqs, t: int, m: int, psnr_db, seed: int,
                        amps=None) -> SpectralInstance:
    """Build an instance with prescribed frequencies.

    Amplitudes default to unit modulus with uniform random phases.  The
    noise realization and the sample-index draw are reproducible functions
    of ``seed``.  Draw order: phases, noise, indices.
    """
    f = wrap_frequency(np.asarray(freqs, dtype=float).ravel())
    if f.size < 1:
        raise ValueError("need at least one frequency")
    if not 1 <= m <= t:
        raise ValueError("need 1 <= m <= t")
    rng = np.random.default_rng(seed)
    if amps is None:
        phases = rng.uniform(0.0, TWO_PI, size=f.size)
        a = np.exp(1j * phases)
    else:
        a = np.asarray(amps, dtype=complex).ravel()
        if a.size != f.size:
            raise ValueError("freqs and amps must have equal length")
    sigma2 = psnr_to_noise_variance(psnr_db)
    clean = synthesize(f, a, t)
    if sigma2 > 0.0:
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(t) + 1j * rng.standard_normal(t)
        )
    else:
        noise = np.zeros(t, dtype=complex)
    full = clean + noise
    idx = np.sort(rng.choice(t, size=m, replace=False) + 1)
    return SpectralInstance(
        true_freqs=f,
        true_amps=a,
        full_signal=full,
        observations=full[idx - 1],
        sample_indices=idx,
        noise_variance=sigma2,
        seed=int(seed),
        t=int(t),
    )


def random_instance(k: int, t: int, m: int, psnr_db, seed: int) -> SpectralInstance:
    """Random instance: frequencies uniform on [0, 2*pi), unit-modulus
    amplitudes with uniform phases, circular complex Gaussian noise with
    variance 10**(-psnr_db/10), and m sample indices drawn uniformly
    without replacement.  Fully reproducible from ``seed``; draw order:
    frequencies, phases, noise, indices.
    """
    if k < 1:
        raise ValueError("need at least one component")
    if not 1 <= m <= t:
        raise ValueError("need 1 <= m <= t")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.0, TWO_PI, size=k)
    phases = rng.uniform(0.0, TWO_PI, size=k)
    amps = np.exp(1j * phases)
    sigma2 = psnr_to_noise_variance(psnr_db)
    clean = synthesize(freqs, amps, t)
    if sigma2 > 0.0:
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(t) + 1j * rng.standard_normal(t)
        )
    else:
        noise = np.zeros(t, dtype=complex)
    full = clean + noise
    idx = np.sort(rng.choice(t, size=m, replace=False) + 1)
    return SpectralInstance(
        true_freqs=freqs,
        true_amps=amps,
        full_signal=full,
        observations=full[idx - 1],
        sample_indices=idx,
        noise_variance=sigma2,
        seed=int(seed),
        t=int(t),
    )
