"""Nodal tables of vector fields used by the variational forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FieldTables:
    """Values (3, ...), optional physical gradients (3, 3, ...) and Eulerian dt (3, ...)."""

    val: np.ndarray
    grad: np.ndarray | None = None
    dt: np.ndarray | None = None

    @property
    def sym_grad(self) -> np.ndarray:
        if self.grad is None:
            raise ValueError("gradient tables were not built for this field")
        return 0.5 * (self.grad + np.swapaxes(self.grad, 0, 1))

    def scaled(self, factor: float) -> "FieldTables":
        return FieldTables(factor * self.val,
                           None if self.grad is None else factor * self.grad,
                           None if self.dt is None else factor * self.dt)


def combine(tables, weights) -> FieldTables:
    """Linear combination of FieldTables with identical layouts."""
    val = sum(w * t.val for w, t in zip(weights, tables))
    grad = None
    if all(t.grad is not None for t in tables):
        grad = sum(w * t.grad for w, t in zip(weights, tables))
    dt = None
    if all(t.dt is not None for t in tables):
        dt = sum(w * t.dt for w, t in zip(weights, tables))
    return FieldTables(np.asarray(val), grad, dt)
