"""First-order jets over numpy arrays.

A Jet carries a nodal value together with its partial derivatives with respect
to the reference cylindrical coordinates (r, theta, z) and, optionally, time.
Arithmetic propagates the product/quotient/chain rules, which keeps every
derivative used by the transforms analytic: nothing in the solver differences
field samples.
"""

from __future__ import annotations

import numpy as np

SLOTS = ("val", "dr", "dth", "dz", "dt")


class Jet:
    __slots__ = SLOTS

    def __init__(self, val, dr=0.0, dth=0.0, dz=0.0, dt=None):
        self.val = val
        self.dr = dr
        self.dth = dth
        self.dz = dz
        self.dt = dt

    # -- helpers -----------------------------------------------------------
    @staticmethod
    def const(value) -> "Jet":
        return Jet(value, 0.0, 0.0, 0.0, 0.0)

    def has_dt(self) -> bool:
        return self.dt is not None

    def grad(self):
        return (self.dr, self.dth, self.dz)

    # -- arithmetic --------------------------------------------------------
    def _dt_add(self, other_dt):
        if self.dt is None and other_dt is None:
            return None
        a = self.dt if self.dt is not None else 0.0
        b = other_dt if other_dt is not None else 0.0
        return a + b

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.dr + other.dr,
                       self.dth + other.dth, self.dz + other.dz,
                       self._dt_add(other.dt))
        return Jet(self.val + other, self.dr, self.dth, self.dz, self.dt)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.dr, -self.dth, -self.dz,
                   None if self.dt is None else -self.dt)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            dt = None
            if self.dt is not None or other.dt is not None:
                a = self.dt if self.dt is not None else 0.0
                b = other.dt if other.dt is not None else 0.0
                dt = a * other.val + self.val * b
            return Jet(self.val * other.val,
                       self.dr * other.val + self.val * other.dr,
                       self.dth * other.val + self.val * other.dth,
                       self.dz * other.val + self.val * other.dz,
                       dt)
        return Jet(self.val * other, self.dr * other, self.dth * other,
                   self.dz * other, None if self.dt is None else self.dt * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.val
        inv2 = inv * inv
        return Jet(inv, -self.dr * inv2, -self.dth * inv2, -self.dz * inv2,
                   None if self.dt is None else -self.dt * inv2)

    def apply(self, f, fprime) -> "Jet":
        """Chain rule through a univariate function with known derivative."""
        g = fprime(self.val)
        return Jet(f(self.val), g * self.dr, g * self.dth, g * self.dz,
                   None if self.dt is None else g * self.dt)

    def sqrt(self) -> "Jet":
        root = np.sqrt(self.val)
        half = 0.5 / root
        return Jet(root, half * self.dr, half * self.dth, half * self.dz,
                   None if self.dt is None else half * self.dt)


def jet_mean_theta(jet: Jet, axis: int) -> Jet:
    """theta-average along the given axis; the averaged jet has no theta slope."""
    def m(x):
        return np.mean(x, axis=axis, keepdims=True) if isinstance(x, np.ndarray) else x
    return Jet(m(jet.val), m(jet.dr), 0.0, m(jet.dz),
               None if jet.dt is None else m(jet.dt))


def _antideriv_samples(values: np.ndarray, axis: int) -> np.ndarray:
    """Antiderivative in theta of mean-free band-limited samples, zero at theta=0.

    values are samples on the uniform theta grid 2*pi*j/n along `axis`; the
    Fourier antiderivative is exact when the integrand is band-limited below
    the grid's Nyquist mode.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    freq = np.fft.fftfreq(n, d=1.0 / n)  # integer wavenumbers
    coef = np.fft.fft(values, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = n
    k = freq.reshape(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(k == 0, 0.0, coef / (1j * k))
    out = np.fft.ifft(anti, axis=axis).real
    first = np.take(out, [0], axis=axis)
    return out - first


def jet_antideriv_theta(jet: Jet, axis: int) -> Jet:
    """Jet of F(theta) = int_0^theta f; requires f mean-free in theta slot-wise."""
    shape = np.shape(jet.val)

    def lift(x):
        return _antideriv_samples(np.broadcast_to(np.asarray(x, dtype=float), shape), axis)

    dt = None if jet.dt is None else lift(jet.dt)
    return Jet(lift(jet.val), lift(jet.dr),
               np.array(jet.val, dtype=float, copy=True), lift(jet.dz), dt)
