"""Inflow/outflow pressure profiles P(t) as piecewise-cubic interpolants of samples."""

from __future__ import annotations

import csv

import numpy as np
from scipy.interpolate import CubicSpline


class PressureProfile:
    """Scalar pressure history built from time samples (piecewise cubic)."""

    def __init__(self, times: np.ndarray, values: np.ndarray):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.size < 2:
            times = np.array([0.0, 1.0])
            values = np.full(2, float(values.reshape(-1)[0]) if values.size else 0.0)
        self.times = times
        self.values = values
        self._spline = CubicSpline(times, values, bc_type="natural", extrapolate=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self._spline(np.clip(t, self.times[0], self.times[-1]))
        return out if out.shape else float(out)

    def l2_norm(self, grid: np.ndarray) -> float:
        """L2 norm over the ledger time grid (midpoint samples, uniform spacing)."""
        grid = np.asarray(grid, dtype=float)
        if grid.size < 2:
            return 0.0
        dt = grid[1] - grid[0]
        vals = np.asarray(self(grid))
        return float(np.sqrt(np.sum(vals ** 2) * dt))

    @classmethod
    def constant(cls, value: float, horizon: float = 1.0) -> "PressureProfile":
        return cls(np.array([0.0, horizon]), np.array([value, value]))

    @classmethod
    def pulse(cls, t0: float, width: float, amplitude: float,
              horizon: float, n_samples: int = 257) -> "PressureProfile":
        t = np.linspace(0.0, horizon, n_samples)
        return cls(t, amplitude * np.exp(-(((t - t0) / width) ** 2)))

    @classmethod
    def from_csv(cls, path) -> "PressureProfile":
        times, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    t, p = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                times.append(t)
                values.append(p)
        return cls(np.array(times), np.array(values))
