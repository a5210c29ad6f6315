"""Independent verification oracles for the solver.

Every oracle here deliberately avoids the solver's Woodbury code path:
gradients are checked against central finite differences, the M x M
coefficient solve against a literal dense N x N inverse, the majorization
property by random sampling, and the noiseless exact-recovery behavior by
running the full pipeline against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .model import TWO_PI, atoms_matrix, random_instance, circular_distance
from .solver import SolverConfig, WeightMatrix, log_sum_penalty, surrogate_q, run_sure_ir

__all__ = [
    "OracleError",
    "OracleReport",
    "fd_gradient",
    "dense_solve_z",
    "check_majorization",
    "exact_recovery_trial",
    "sweep_f_theta_1d",
    "run_suites",
    "SUITE_NAMES",
]

DENSE_CAP = 256


class OracleError(RuntimeError):
    """An oracle could not be evaluated (non-finite value, singular system)."""


@dataclass
class OracleReport:
    """Outcome of one oracle suite."""

    name: str
    max_abs_err: float
    max_rel_err: float
    cases: int
    passed: bool
    tolerance: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _report(name, abs_errs, rel_errs, tolerance) -> OracleReport:
    max_abs = float(np.max(abs_errs)) if len(abs_errs) else 0.0
    max_rel = float(np.max(rel_errs)) if len(rel_errs) else 0.0
    return OracleReport(
        name=name,
        max_abs_err=max_abs,
        max_rel_err=max_rel,
        cases=len(rel_errs),
        passed=bool(max_rel <= tolerance),
        tolerance=float(tolerance),
    )


def fd_gradient(objective, theta, step: float) -> np.ndarray:
    """Central finite-difference gradient of a callable objective.

    Parameters
    ----------
    objective : callable
        Maps a frequency vector to a real scalar.
    theta : array_like
        Point at which to differentiate.
    step : float
        Half-width of the central difference.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    th = np.asarray(theta, dtype=float).ravel()
    grad = np.empty(th.size)
    for i in range(th.size):
        hi = th.copy()
        lo = th.copy()
        hi[i] += step
        lo[i] -= step
        fp, fm = objective(hi), objective(lo)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError("objective returned a non-finite value")
        grad[i] = (fp - fm) / (2.0 * step)
    return grad


def dense_solve_z(theta, weights: WeightMatrix, lam: float, y, indices) -> np.ndarray:
    """Literal dense solve of (A^H A + lam^-1 D) z = A^H y.

    Factorizes the full N x N system; no Woodbury conversion.  Intended as
    the reference for the solver's M x M path, capped at N <= 256.
    """
    th = np.asarray(theta, dtype=float).ravel()
    if th.size > DENSE_CAP:
        raise OracleError(f"dense oracle capped at N <= {DENSE_CAP}")
    y = np.asarray(y, dtype=complex).ravel()
    a_mat = atoms_matrix(th, indices)
    b = a_mat.conj().T @ a_mat + np.diag(weights.diag) / lam
    try:
        return np.linalg.solve(b, a_mat.conj().T @ y)
    except np.linalg.LinAlgError as exc:
        raise OracleError(
            f"singular dense system (cond~{np.linalg.cond(b):.3e})"
        ) from exc


def check_majorization(samples: int, seed: int, eps_values=(1.0, 1e-4, 1e-8)) -> OracleReport:
    """Audit Q(z|z_hat) >= L(z) with equality at z = z_hat.

    Draws random complex pairs for each eps, records the most negative gap
    and the largest |Q - L| at z = z_hat; passes when both stay within
    1e-12.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    worst_touch = 0.0
    per_eps = max(1, samples // len(eps_values))
    cases = 0
    for eps in eps_values:
        for _ in range(per_eps):
            n = int(rng.integers(1, 12))
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            zh = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            gap = surrogate_q(z, zh, eps) - log_sum_penalty(z, eps)
            worst_gap = min(worst_gap, gap)
            touch = abs(surrogate_q(zh, zh, eps) - log_sum_penalty(zh, eps))
            worst_touch = max(worst_touch, touch)
            cases += 1
    max_err = max(-worst_gap, worst_touch)
    return OracleReport(
        name="majorization",
        max_abs_err=float(max_err),
        max_rel_err=float(max_err),
        cases=cases,
        passed=bool(max_err <= 1e-12),
        tolerance=1e-12,
    )


def exact_recovery_trial(k: int, m: int, t: int, seed: int,
                         config: SolverConfig | None = None) -> bool:
    """Run the full pipeline on a noiseless instance; true iff the model
    order is exact and the frequency error is at most 1e-6 cycles."""
    if m > t:
        raise ValueError("m must not exceed t")
    inst = random_instance(k, t, m, None, seed)
    est = run_sure_ir(inst.observations, inst.sample_indices, config)
    if est.k_est != k:
        return False
    from .bench import match_frequencies

    _, err = match_frequencies(inst.true_freqs, est.freqs)
    return bool(err <= 1e-6)


def sweep_f_theta_1d(y, indices, weights: WeightMatrix, lam: float,
                     grid_size: int):
    """Exhaustive single-atom minimizer of the reduced objective.

    Evaluates f(theta) on a uniform grid of ``grid_size`` points for the
    N = 1 model and returns (argmin, min).  Ties break to the first index.
    """
    if weights.diag.size != 1:
        raise ValueError("the 1-D sweep oracle requires a single-atom model")
    y = np.asarray(y, dtype=complex).ravel()
    idx = np.asarray(indices, dtype=float).ravel()
    grid = TWO_PI * np.arange(grid_size) / grid_size
    # f(theta) = -|a^H y|^2 / (a^H a + d/lam) for one atom, evaluated directly
    proj = np.exp(1j * np.outer(grid, idx)) @ y  # conj(a)^T y per grid point
    denom = idx.size + weights.diag[0] / lam
    vals = -(np.abs(proj) ** 2) / denom
    j = int(np.argmin(vals))
    return float(grid[j]), float(vals[j])


# --------------------------------------------------------------------------
# suites for the verify command
# --------------------------------------------------------------------------


def _suite_gradient(seed: int, cases: int = 50, tolerance: float = 1e-5) -> OracleReport:
    from .solver import f_theta, grad_f
    from .mmv import f_theta_mmv, grad_f_mmv

    rng = np.random.default_rng(seed)
    rels, abss = [], []
    for c in range(cases):
        m = int(rng.integers(4, 12))
        n = int(rng.integers(2, 8))
        t = 4 * m
        idx = np.sort(rng.choice(t, size=m, replace=False) + 1)
        theta = rng.uniform(0, TWO_PI, size=n)
        z = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        w = WeightMatrix(diag=1.0 / (np.abs(z) ** 2 + 10.0 ** rng.uniform(-4, 0)))
        lam = 10.0 ** rng.uniform(-1, 2)
        if c % 2 == 0:
            y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            ana = grad_f(theta, w, lam, y, idx)
            num = fd_gradient(lambda th: f_theta(th, w, lam, y, idx), theta, 1e-6)
        else:
            ell = int(rng.integers(1, 4))
            y = rng.standard_normal((m, ell)) + 1j * rng.standard_normal((m, ell))
            ana = grad_f_mmv(theta, w, lam, y, idx)
            num = fd_gradient(lambda th: f_theta_mmv(th, w, lam, y, idx), theta, 1e-6)
        scale = max(np.max(np.abs(num)), 1e-10)
        abss.append(float(np.max(np.abs(ana - num))))
        rels.append(abss[-1] / scale)
    return _report("gradient", abss, rels, tolerance)


def _suite_woodbury(seed: int, cases: int = 50, tolerance: float = 1e-8) -> OracleReport:
    from .solver import solve_z

    rng = np.random.default_rng(seed)
    rels, abss = [], []
    for _ in range(cases):
        m = int(rng.integers(4, 17))
        n = int(rng.integers(2, 65))
        t = max(2 * m, 32)
        idx = np.sort(rng.choice(t, size=m, replace=False) + 1)
        theta = rng.uniform(0, TWO_PI, size=n)
        w = WeightMatrix(diag=10.0 ** rng.uniform(-2, 4, size=n))
        lam = 10.0 ** rng.uniform(-1, 3)
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        fast = solve_z(theta, w, lam, y, idx)
        dense = dense_solve_z(theta, w, lam, y, idx)
        scale = max(float(np.linalg.norm(dense)), 1e-12)
        abss.append(float(np.linalg.norm(fast - dense)))
        rels.append(abss[-1] / scale)
    return _report("woodbury", abss, rels, tolerance)


def _suite_majorization(seed: int) -> OracleReport:
    return check_majorization(samples=1000, seed=seed)


def _suite_recovery(seed: int, trials: int = 20, config: SolverConfig | None = None) -> OracleReport:
    ok = sum(
        exact_recovery_trial(1, 4, 32, seed + i, config) for i in range(trials)
    )
    rate = ok / trials
    return OracleReport(
        name="recovery",
        max_abs_err=float(1.0 - rate),
        max_rel_err=float(1.0 - rate),
        cases=trials,
        passed=bool(rate >= 0.9),
        tolerance=0.1,
    )


SUITE_NAMES = ("majorization", "gradient", "woodbury", "recovery")


def run_suites(names=None, seed: int = 0) -> list[OracleReport]:
    """Run the named oracle suites (all by default) and return reports."""
    selected = SUITE_NAMES if not names else tuple(names)
    unknown = set(selected) - set(SUITE_NAMES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    out = []
    for name in selected:
        if name == "majorization":
            out.append(_suite_majorization(seed))
        elif name == "gradient":
            out.append(_suite_gradient(seed))
        elif name == "woodbury":
            out.append(_suite_woodbury(seed))
        elif name == "recovery":
            out.append(_suite_recovery(seed))
    return out
