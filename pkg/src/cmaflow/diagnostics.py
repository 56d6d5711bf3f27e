"""Per-step scalar diagnostics, the versioned CSV format, and the
exponential decay-rate fitter for the oscillation of u-dot."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

CSV_HEADER_COMMENT = "# cmaflow-diag v1"

OSC_FLOOR = 1e-12


@dataclass
class DiagnosticsRecord:
    """One row per accepted step; column order is fixed."""

    t: float
    dt: float
    H_min: float
    H_max: float
    TrH_min: float
    TrH_max: float
    lambda_min: float
    lambda_max: float
    osc_udot: float
    residual_sup: float
    G_max: float
    phi_mean: float
    phi_sup: float


COLUMNS = [f.name for f in fields(DiagnosticsRecord)]


def write_csv(path, records) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER_COMMENT + "\n")
        fh.write(",".join(COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(format(getattr(rec, c), ".17g") for c in COLUMNS))
            fh.write("\n")


def append_csv(fh, rec) -> None:
    """Append one row to an open diagnostics CSV (append-only during a run)."""
    fh.write(",".join(format(getattr(rec, c), ".17g") for c in COLUMNS))
    fh.write("\n")
    fh.flush()


def read_csv(path) -> list[DiagnosticsRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER_COMMENT:
            raise ValueError(f"{path}: unexpected header {header!r}")
        names = fh.readline().rstrip("\n").split(",")
        if names != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {names}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [float(v) for v in line.split(",")]
            records.append(DiagnosticsRecord(*vals))
    return records


@dataclass
class DecayFit:
    """Least-squares fit omega(t) ~ C exp(-eta t) over the final decade."""

    eta: float
    C: float
    r_squared: float
    n_points: int
    note: str = ""

    @property
    def fitted(self) -> bool:
        return self.n_points > 0


def fit_decay(times, osc, floor: float = OSC_FLOOR) -> DecayFit:
    """Fit log(omega) vs t over the final decade of decay above the floor.

    Returns a skipped fit (n_points = 0) with a note when the series starts
    at the floor, e.g. for a trivially stationary run.
    """
    t = np.asarray(times, dtype=np.float64)
    w = np.asarray(osc, dtype=np.float64)
    if t.shape != w.shape or t.ndim != 1:
        raise ValueError("fit_decay expects matching 1-d series")

    alive = w > floor
    if not np.any(alive) or w[0] <= floor:
        return DecayFit(0.0, 0.0, 0.0, 0, note="series at floor; fit skipped")
    t, w = t[alive], w[alive]

    # final decade: trailing points within 10x of the last surviving value
    w_end = w[-1]
    window = w <= 10.0 * w_end
    # keep the trailing contiguous block
    idx = np.nonzero(~window)[0]
    start = idx[-1] + 1 if idx.size else 0
    t_fit, w_fit = t[start:], w[start:]
    if t_fit.size < 3:
        t_fit, w_fit = t, w
    if t_fit.size < 3 or t_fit[-1] <= t_fit[0]:
        return DecayFit(0.0, 0.0, 0.0, 0, note="too few points; fit skipped")

    y = np.log(w_fit)
    slope, intercept = np.polyfit(t_fit, y, 1)
    pred = slope * t_fit + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(-float(slope), float(np.exp(intercept)), r2, int(t_fit.size))
