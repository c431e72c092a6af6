"""Clamped tensor basis for scalar shell fields on omega = (0, 2*pi) x (0, L).

The theta factor is the orthonormal Fourier family {1, cos k*theta, sin k*theta};
the z factor is the polynomial bubble family z^2 (L-z)^2 P_j(2z/L - 1)
orthonormalized in L^2(0, L).  Every basis function and its first z-derivative
vanish at z in {0, L}, so all expansions are clamped by construction, and all
derivatives up to second order are available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .quadrature import gauss_legendre

DERIV_KEYS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def _clamped_z_family(n_z: int, L: float):
    """Orthonormal clamped polynomials on (0, L) and their first two derivatives."""
    bubble = nppoly.Polynomial([0.0, 0.0, L * L, -2.0 * L, 1.0])  # z^2 (L - z)^2
    raw = []
    for j in range(n_z):
        leg = npleg.Legendre.basis(j, domain=[0.0, L])
        raw.append(bubble * leg.convert(kind=nppoly.Polynomial))
    zq, wq = gauss_legendre(max(8 + 2 * n_z, 16), 0.0, L)
    deg = max(len(p.coef) for p in raw)
    coeffs = np.zeros((n_z, deg))
    for i, p in enumerate(raw):
        coeffs[i, :len(p.coef)] = p.coef
    # two Cholesky sweeps; the second removes the conditioning residue of the first
    for _ in range(2):
        vals = nppoly.polyval(zq, coeffs.T)
        gram = (vals * wq) @ vals.T
        coeffs = np.linalg.solve(np.linalg.cholesky(gram), coeffs)
    polys = [nppoly.Polynomial(c) for c in coeffs]
    return polys, [p.deriv() for p in polys], [p.deriv(2) for p in polys]


class ShellBasis:
    """Tensor basis {theta modes} x {clamped z modes} with a canonical ordering.

    Modes are ordered by increasing (wavenumber + z-index) so that truncating
    to the first n modes keeps the smoothest fields; the ordering is stable and
    nested across resolutions.
    """

    def __init__(self, n_theta: int, n_z: int, L: float):
        if n_theta < 1 or n_z < 1:
            raise ValueError("n_theta and n_z must be >= 1")
        self.n_theta = n_theta
        self.n_z = n_z
        self.L = float(L)
        self.z_polys, self.z_d1, self.z_d2 = _clamped_z_family(n_z, self.L)
        # theta functions indexed 0..2*n_theta: 0 -> const, 2k-1 -> cos k, 2k -> sin k
        self.n_theta_funcs = 2 * n_theta + 1
        order = sorted(
            ((it, jz) for it in range(self.n_theta_funcs) for jz in range(n_z)),
            key=lambda p: (self._wave(p[0]) + p[1], self._wave(p[0]), p[0], p[1]),
        )
        self.modes = order
        self.n_modes = len(order)
        self._it_idx = np.array([it for it, _ in order])
        self._jz_idx = np.array([jz for _, jz in order])
        self._plane_cache: dict = {}

    @staticmethod
    def _wave(i_theta: int) -> int:
        return 0 if i_theta == 0 else (i_theta + 1) // 2

    def theta_tables(self, theta: np.ndarray):
        """Values/derivatives of the theta family, shape (n_theta_funcs, len(theta))."""
        theta = np.asarray(theta, dtype=float)
        n = self.n_theta_funcs
        d0 = np.empty((n,) + theta.shape)
        d1 = np.empty_like(d0)
        d2 = np.empty_like(d0)
        d0[0] = 1.0 / np.sqrt(2.0 * np.pi)
        d1[0] = 0.0
        d2[0] = 0.0
        for k in range(1, self.n_theta + 1):
            c, s = np.cos(k * theta), np.sin(k * theta)
            norm = 1.0 / np.sqrt(np.pi)
            d0[2 * k - 1], d1[2 * k - 1], d2[2 * k - 1] = norm * c, -norm * k * s, -norm * k * k * c
            d0[2 * k], d1[2 * k], d2[2 * k] = norm * s, norm * k * c, -norm * k * k * s
        return d0, d1, d2

    def z_tables(self, z: np.ndarray):
        z = np.asarray(z, dtype=float)
        d0 = np.array([p(z) for p in self.z_polys])
        d1 = np.array([p(z) for p in self.z_d1])
        d2 = np.array([p(z) for p in self.z_d2])
        return d0, d1, d2

    def eval_matrices(self, theta: np.ndarray, z: np.ndarray, dtheta: int = 0, dz: int = 0):
        """Per-mode factor tables (n_modes, ...) for separable evaluation."""
        T = self.theta_tables(theta)[dtheta][self._it_idx]
        Z = self.z_tables(z)[dz][self._jz_idx]
        return T, Z

    def plane_tables(self, theta: np.ndarray, z: np.ndarray) -> dict:
        """Mode tables on the tensor grid theta x z, cached per grid signature.

        Returns a dict keyed by derivative multi-index (dtheta, dz) with arrays
        of shape (n_modes, len(theta), len(z)).
        """
        theta = np.asarray(theta, dtype=float)
        z = np.asarray(z, dtype=float)
        key = (theta.shape[0], z.shape[0],
               float(theta[0]), float(theta[-1]), float(z[0]), float(z[-1]))
        hit = self._plane_cache.get(key)
        if hit is not None:
            return hit
        tt = self.theta_tables(theta)
        zz = self.z_tables(z)
        out = {}
        for (dt, dz) in DERIV_KEYS:
            out[(dt, dz)] = np.einsum("mi,mj->mij", tt[dt][self._it_idx],
                                      zz[dz][self._jz_idx])
        if len(self._plane_cache) > 16:
            self._plane_cache.clear()
        self._plane_cache[key] = out
        return out


@dataclass
class ShellField:
    """Scalar field on omega in a ShellBasis, with a sup-norm cap for domain use."""

    basis: ShellBasis
    coeffs: np.ndarray
    bound: float = np.inf
    _sup: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.n_modes,):
            raise ValueError("coefficient vector does not match basis size")

    def plane_jets(self, theta: np.ndarray, z: np.ndarray, tables: dict | None = None) -> dict:
        """Field and derivatives up to order 2 on the tensor grid theta x z."""
        tabs = tables if tables is not None else self.basis.plane_tables(theta, z)
        return {k: np.einsum("m,mij->ij", self.coeffs, tabs[k]) for k in DERIV_KEYS}

    def eval(self, theta: np.ndarray, z: np.ndarray, dtheta: int = 0, dz: int = 0) -> np.ndarray:
        """Pointwise evaluation at broadcastable angle/height arrays."""
        theta = np.asarray(theta, dtype=float)
        z = np.asarray(z, dtype=float)
        tt = self.basis.theta_tables(theta)[dtheta][self.basis._it_idx]
        zz = self.basis.z_tables(z)[dz][self.basis._jz_idx]
        return np.einsum("m,m...->...", self.coeffs, tt * zz)

    def sup_abs(self, n_theta: int = 192, n_z: int = 96) -> float:
        """Dense-grid sup-norm of the field (grid-search oracle resolution)."""
        if self._sup is None or (n_theta, n_z) != (192, 96):
            lo, hi = self.extrema(n_theta, n_z)
            sup = max(abs(lo), abs(hi))
            if (n_theta, n_z) == (192, 96):
                self._sup = sup
            return sup
        return self._sup

    def extrema(self, n_theta: int = 192, n_z: int = 96):
        """Dense-grid (min, max) of the field values."""
        th = 2.0 * np.pi * np.arange(n_theta) / n_theta
        z = np.linspace(0.0, self.basis.L, n_z)
        T, Z = self.basis.eval_matrices(th, z)
        vals = np.einsum("m,mi,mj->ij", self.coeffs, T, Z)
        return float(vals.min()), float(vals.max())

    def scaled(self, factor: float) -> "ShellField":
        return ShellField(self.basis, factor * self.coeffs, self.bound)

    def __add__(self, other: "ShellField") -> "ShellField":
        return ShellField(self.basis, self.coeffs + other.coeffs, max(self.bound, other.bound))


def zero_field(basis: ShellBasis, bound: float = np.inf) -> ShellField:
    return ShellField(basis, np.zeros(basis.n_modes), bound)


def random_shell_field(basis: ShellBasis, rng: np.random.Generator,
                       sup_target: float, bound: float = np.inf) -> ShellField:
    """Random smooth clamped field scaled to a prescribed sup-norm."""
    decay = np.array([1.0 / (1.0 + basis._wave(it) + jz) ** 2 for it, jz in basis.modes])
    coeffs = rng.standard_normal(basis.n_modes) * decay
    field0 = ShellField(basis, coeffs, bound)
    sup = field0.sup_abs()
    if sup == 0.0:
        return field0
    return ShellField(basis, coeffs * (sup_target / sup), bound)


def bending_gram(basis: ShellBasis, theta: np.ndarray, w_theta: np.ndarray,
                 z: np.ndarray, w_z: np.ndarray) -> np.ndarray:
    """Gram matrix of the flat Hessian pairing int_omega H(xi_i) : H(xi_j) dA."""
    tabs = basis.plane_tables(theta, z)
    w = w_theta[:, None] * w_z[None, :]
    g = np.einsum("mij,nij,ij->mn", tabs[(2, 0)], tabs[(2, 0)], w)
    g += 2.0 * np.einsum("mij,nij,ij->mn", tabs[(1, 1)], tabs[(1, 1)], w)
    g += np.einsum("mij,nij,ij->mn", tabs[(0, 2)], tabs[(0, 2)], w)
    return 0.5 * (g + g.T)
