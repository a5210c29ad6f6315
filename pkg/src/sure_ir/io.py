"""Plain CSV/JSON readers and writers for signals, instances and results.

File formats
------------
signal CSV      header ``index,re,im``; one row per retained sample index.
MMV CSV         header ``index,snapshot,re,im``; snapshot is 0-based.
instance JSON   ``{k, t, m, psnr_db, seed, true_freqs, true_amps_re,
                true_amps_im, sample_indices}``.
estimate JSON   ``{freqs, amps_re, amps_im, objective_trace, iterations,
                final_lambda}`` (MMV: 2-D amp arrays, one row per component).
sweep CSV       header ``variable,value,trials,mean_rsnr_db,success_rate,
                mean_iters,mean_wall_ms``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import SpectralInstance


class FormatError(ValueError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def write_signal_csv(path, indices, values) -> None:
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, v in zip(np.asarray(indices, dtype=int), values):
            w.writerow([int(i), repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path):
    """Return (indices, values) from a signal CSV."""
    indices, values = [], []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty signal file", line=1)
    if [c.strip() for c in rows[0]] != ["index", "re", "im"]:
        raise FormatError("expected header 'index,re,im'", line=1)
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError("expected 3 columns", line=ln)
        try:
            indices.append(int(row[0]))
            values.append(complex(float(row[1]), float(row[2])))
        except ValueError as exc:
            raise FormatError(str(exc), line=ln) from exc
    if not indices:
        raise FormatError("no data rows", line=2)
    return np.asarray(indices, dtype=int), np.asarray(values, dtype=complex)


def write_mmv_csv(path, indices, y_matrix) -> None:
    y = np.asarray(y_matrix, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "snapshot", "re", "im"])
        for ell in range(y.shape[1]):
            for i, v in zip(np.asarray(indices, dtype=int), y[:, ell]):
                w.writerow([int(i), ell, repr(float(v.real)), repr(float(v.imag))])


def read_mmv_csv(path):
    """Return (indices, y_matrix) from an observation-matrix CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty observation file", line=1)
    if [c.strip() for c in rows[0]] != ["index", "snapshot", "re", "im"]:
        raise FormatError("expected header 'index,snapshot,re,im'", line=1)
    cells = {}
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise FormatError("expected 4 columns", line=ln)
        try:
            cells[(int(row[0]), int(row[1]))] = complex(float(row[2]), float(row[3]))
        except ValueError as exc:
            raise FormatError(str(exc), line=ln) from exc
    if not cells:
        raise FormatError("no data rows", line=2)
    indices = sorted({i for i, _ in cells})
    snaps = sorted({s for _, s in cells})
    if snaps != list(range(len(snaps))):
        raise FormatError("snapshot numbers must be 0..L-1 with no gap")
    y = np.zeros((len(indices), len(snaps)), dtype=complex)
    for (i, s), v in cells.items():
        y[indices.index(i), s] = v
    return np.asarray(indices, dtype=int), y


def write_instance(prefix, instance: SpectralInstance) -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` (observations) and ``<prefix>.json`` (metadata)."""
    prefix = Path(prefix)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    write_signal_csv(csv_path, instance.sample_indices, instance.observations)
    sigma2 = instance.noise_variance
    meta = {
        "k": instance.k,
        "t": instance.t,
        "m": instance.m,
        "psnr_db": None if sigma2 == 0.0 else float(-10.0 * np.log10(sigma2)),
        "seed": instance.seed,
        "true_freqs": [float(f) for f in instance.true_freqs],
        "true_amps_re": [float(a.real) for a in instance.true_amps],
        "true_amps_im": [float(a.imag) for a in instance.true_amps],
        "sample_indices": [int(i) for i in instance.sample_indices],
    }
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


def estimate_to_dict(freqs, amps, objective_trace, iterations, final_lambda) -> dict:
    amps = np.asarray(amps, dtype=complex)
    return {
        "freqs": [float(f) for f in np.asarray(freqs, dtype=float)],
        "amps_re": amps.real.tolist(),
        "amps_im": amps.imag.tolist(),
        "objective_trace": [float(g) for g in objective_trace],
        "iterations": int(iterations),
        "final_lambda": float(final_lambda),
    }


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


SWEEP_HEADER = [
    "variable",
    "value",
    "trials",
    "mean_rsnr_db",
    "success_rate",
    "mean_iters",
    "mean_wall_ms",
]


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r[k] for k in SWEEP_HEADER])


def write_trial_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
