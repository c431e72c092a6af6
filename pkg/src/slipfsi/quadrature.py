"""Quadrature rules on the reference cylinder, its shell parametrization and the end disks.

Conventions
-----------
* theta is always sampled on the uniform (trapezoid) grid ``2*pi*j/n``; for
  2*pi-periodic integrands the rule is exact for trigonometric polynomials of
  degree < n_theta.
* r and z use Gauss-Legendre nodes; the r axis is split into panels at the
  cutoff radii so that piecewise-polynomial cutoff profiles integrate exactly.
* Volume weights on the reference cylinder include the cylindrical metric
  factor r.  Deformed-domain integrals multiply by ``detG / r`` (the stored
  determinant of the map gradient already carries one factor of r).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes/weights on (a, b); exact for polynomials of degree 2n-1."""
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (b - a) * (x + 1.0) + a
    return nodes, 0.5 * (b - a) * w


def composite_gauss(points_per_panel, breakpoints):
    """Concatenated Gauss-Legendre panels between consecutive breakpoints."""
    nodes, weights = [], []
    for n, (a, b) in zip(points_per_panel, zip(breakpoints[:-1], breakpoints[1:])):
        x, w = gauss_legendre(n, a, b)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def trapezoid_theta(n: int):
    """Uniform periodic rule on (0, 2*pi): spectrally accurate for smooth integrands."""
    th = 2.0 * np.pi * np.arange(n) / n
    w = np.full(n, 2.0 * np.pi / n)
    return th, w


@dataclass(frozen=True)
class SurfaceRule:
    """Tensor rule on omega = (0, 2*pi) x (0, L); dA = dtheta dz (no metric factor)."""

    theta: np.ndarray
    z: np.ndarray
    w_theta: np.ndarray
    w_z: np.ndarray

    @classmethod
    def build(cls, n_theta: int, n_z: int, L: float) -> "SurfaceRule":
        th, wth = trapezoid_theta(n_theta)
        z, wz = gauss_legendre(n_z, 0.0, L)
        return cls(th, z, wth, wz)

    @property
    def weights(self) -> np.ndarray:
        return self.w_theta[:, None] * self.w_z[None, :]

    def integrate(self, values: np.ndarray) -> float:
        """Integrate nodal samples of shape (..., n_theta, n_z) over omega."""
        return float(np.sum(values * self.weights, axis=(-2, -1)).sum())


@dataclass(frozen=True)
class VolumeRule:
    """Tensor rule on the reference cylinder, r panels split at the cutoff radii."""

    r: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    w_r: np.ndarray
    w_theta: np.ndarray
    w_z: np.ndarray

    @classmethod
    def build(cls, n_r: int, n_theta: int, n_z: int, R: float, L: float,
              r_breaks=()) -> "VolumeRule":
        breaks = [0.0] + sorted(r_breaks) + [R]
        widths = np.diff(breaks)
        counts = np.maximum(2, np.round(n_r * widths / R).astype(int))
        # keep the total budget close to n_r
        while counts.sum() > max(n_r, 2 * len(widths)):
            counts[np.argmax(counts)] -= 1
        r, wr = composite_gauss(counts, breaks)
        th, wth = trapezoid_theta(n_theta)
        z, wz = gauss_legendre(n_z, 0.0, L)
        return cls(r, th, z, wr, wth, wz)

    @property
    def w_param(self) -> np.ndarray:
        """Parameter-space weights dr dtheta dz, shape (nr, nth, nz)."""
        return (self.w_r[:, None, None] * self.w_theta[None, :, None]
                * self.w_z[None, None, :])

    @property
    def weights(self) -> np.ndarray:
        """Reference-domain weights including the metric factor r."""
        return self.w_param * self.r[:, None, None]

    def integrate_reference(self, values: np.ndarray) -> float:
        """Integral over the undeformed cylinder of samples (..., nr, nth, nz)."""
        return float(np.sum(values * self.weights, axis=(-3, -2, -1)).sum())

    def integrate_deformed(self, values: np.ndarray, detG: np.ndarray) -> float:
        """Integral over the deformed cylinder; detG is the stored map determinant."""
        return float(np.sum(values * (self.w_param * detG), axis=(-3, -2, -1)).sum())


@dataclass(frozen=True)
class DiskRule:
    """Rule on one end disk z in {0, L}: r x theta with metric factor r."""

    r: np.ndarray
    theta: np.ndarray
    w_r: np.ndarray
    w_theta: np.ndarray
    z: float

    @classmethod
    def build(cls, n_r: int, n_theta: int, R: float, z: float) -> "DiskRule":
        r, wr = gauss_legendre(n_r, 0.0, R)
        th, wth = trapezoid_theta(n_theta)
        return cls(r, th, wr, wth, z)

    @property
    def weights(self) -> np.ndarray:
        return (self.w_r * self.r)[:, None] * self.w_theta[None, :]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.weights, axis=(-2, -1)).sum())


def dump_rule_csv(path, columns: dict) -> None:
    """Write 1D node/weight columns to CSV for external inspection."""
    keys = list(columns)
    n = max(len(np.atleast_1d(columns[k])) for k in keys)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for i in range(n):
            row = []
            for k in keys:
                col = np.atleast_1d(columns[k])
                row.append("%.17g" % col[i] if i < len(col) else "")
            writer.writerow(row)
