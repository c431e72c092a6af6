"""Koiter shell calculus: change-of-metric/curvature tensors, energies and forms.

Tensor entries follow the printed closed forms for a cylindrical midsurface of
radius R.  The as-printed change-of-metric tensor has the (2,2) entry
1 + (dz eta)^2, which does not vanish at eta = 0; a configuration flag selects
the alternative convention with (dz eta)^2 instead.  Both share the same
Frechet derivative, and the directional-derivative identity
d/ds K(eta + s xi) = 2 K(eta, xi) is pinned by a finite-difference oracle in
the tests rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContactViolation
from .quadrature import SurfaceRule
from .shellbasis import ShellField

AS_PRINTED = "as-printed"
VANISHING = "vanishing-at-zero"


@dataclass(frozen=True)
class ElasticityTensor:
    """Action A T = lam tr(T) I + 2 mu T on symmetric 2x2 tensor fields."""

    lam: float = 1.0
    mu: float = 1.0

    def apply(self, T: np.ndarray) -> np.ndarray:
        out = 2.0 * self.mu * T
        trace = T[0, 0] + T[1, 1]
        out[0, 0] = out[0, 0] + self.lam * trace
        out[1, 1] = out[1, 1] + self.lam * trace
        return out

    def contract(self, S: np.ndarray, T: np.ndarray) -> np.ndarray:
        """Pointwise A S : T."""
        AS = self.apply(np.array(S, copy=True))
        return np.einsum("ab...,ab...->...", AS, T)

    @property
    def coercivity_constant(self) -> float:
        """Smallest eigenvalue of the Voigt matrix of the quadratic form T -> A T : T."""
        voigt = np.array([
            [self.lam + 2.0 * self.mu, self.lam, 0.0],
            [self.lam, self.lam + 2.0 * self.mu, 0.0],
            [0.0, 0.0, 2.0 * self.mu],
        ])
        return float(np.linalg.eigvalsh(voigt).min())

    @staticmethod
    def scaled_identity() -> "ElasticityTensor":
        return ElasticityTensor(lam=0.0, mu=0.5)  # A T = T


def _sym2(a11, a12, a22) -> np.ndarray:
    return np.stack([np.stack([a11, a12]), np.stack([a12, a22])])


def metric_tensor(R: float, p: dict, convention: str = AS_PRINTED) -> np.ndarray:
    """Change-of-metric tensor G(eta) from plane jets of eta."""
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    a11 = (R + e) ** 2 + et ** 2 - R * R
    a12 = et * ez
    a22 = 1.0 + ez ** 2 if convention == AS_PRINTED else ez ** 2
    return _sym2(a11, a12, a22 + 0.0 * e)


def metric_tensor_deriv(R: float, p: dict, q: dict) -> np.ndarray:
    """Frechet derivative G'(eta) xi; identical for both conventions."""
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    x, xt, xz = q[(0, 0)], q[(1, 0)], q[(0, 1)]
    return _sym2(2.0 * (R + e) * x + 2.0 * et * xt,
                 xt * ez + et * xz,
                 2.0 * ez * xz)


def curvature_tensor(R: float, p: dict) -> np.ndarray:
    """Change-of-curvature tensor Rsharp(eta) from plane jets with second derivatives."""
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    ett, etz, ezz = p[(2, 0)], p[(1, 1)], p[(0, 2)]
    gam = 1.0 + e / R
    a11 = gam * ett - (R + e) ** 2 / R - 2.0 * et ** 2 / R + R
    a12 = gam * etz - et * ez / R
    a22 = gam * ezz
    return _sym2(a11, a12, a22)


def curvature_tensor_deriv(R: float, p: dict, q: dict) -> np.ndarray:
    """Frechet derivative (Rsharp)'(eta) xi."""
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    ett, etz, ezz = p[(2, 0)], p[(1, 1)], p[(0, 2)]
    x, xt, xz = q[(0, 0)], q[(1, 0)], q[(0, 1)]
    xtt, xtz, xzz = q[(2, 0)], q[(1, 1)], q[(0, 2)]
    gam = 1.0 + e / R
    a11 = x * ett / R + gam * xtt - 2.0 * (R + e) * x / R - 4.0 * et * xt / R
    a12 = x * etz / R + gam * xtz - (xt * ez + et * xz) / R
    a22 = x * ezz / R + gam * xzz
    return _sym2(a11, a12, a22)


def linearized_metric(R: float, d: dict, p: dict, convention: str = AS_PRINTED) -> np.ndarray:
    """G_delta(eta): the metric tensor with one factor frozen at delta (affine in eta)."""
    dd, dt, dz = d[(0, 0)], d[(1, 0)], d[(0, 1)]
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    a11 = (R + dd) * (R + e) + dt * et - R * R
    a12 = 0.5 * (dt * ez + et * dz)
    a22 = 1.0 + dz * ez if convention == AS_PRINTED else dz * ez
    return _sym2(a11, a12, a22 + 0.0 * e)


def linearized_curvature(R: float, d: dict, p: dict) -> np.ndarray:
    """Rsharp_delta(eta): curvature tensor linearized around delta (affine in eta)."""
    dd, dt, dz = d[(0, 0)], d[(1, 0)], d[(0, 1)]
    e, et, ez = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    ett, etz, ezz = p[(2, 0)], p[(1, 1)], p[(0, 2)]
    gam = 1.0 + dd / R
    a11 = gam * ett - (R + e) * (R + dd) / R - 2.0 * dt * et / R + R
    a12 = gam * etz - 0.5 * (dt * ez + et * dz) / R
    a22 = gam * ezz
    return _sym2(a11, a12, a22)


def _check_gamma(R: float, vals: np.ndarray) -> None:
    if np.any(1.0 + vals / R <= 0.0):
        raise ContactViolation("1 + eta/R is not positive everywhere")


def koiter_energy(R: float, A: ElasticityTensor, h_s: float, eta: ShellField,
                  rule: SurfaceRule, convention: str = AS_PRINTED) -> float:
    """Nonlinear Koiter energy (h/6) int A G:G + (h^3/48) int A Rs:Rs."""
    p = eta.plane_jets(rule.theta, rule.z)
    _check_gamma(R, p[(0, 0)])
    G = metric_tensor(R, p, convention)
    Rs = curvature_tensor(R, p)
    mem = rule.integrate(A.contract(G, G))
    ben = rule.integrate(A.contract(Rs, Rs))
    return h_s / 6.0 * mem + h_s ** 3 / 48.0 * ben


def koiter_form(R: float, A: ElasticityTensor, h_s: float, eta: ShellField,
                xi: ShellField, rule: SurfaceRule, convention: str = AS_PRINTED) -> float:
    """K(eta, xi) = (h/6) int A G(eta):G'(eta)xi + (h^3/48) int A Rs:(Rs)'xi."""
    p = eta.plane_jets(rule.theta, rule.z)
    q = xi.plane_jets(rule.theta, rule.z)
    _check_gamma(R, p[(0, 0)])
    mem = rule.integrate(A.contract(metric_tensor(R, p, convention),
                                    metric_tensor_deriv(R, p, q)))
    ben = rule.integrate(A.contract(curvature_tensor(R, p),
                                    curvature_tensor_deriv(R, p, q)))
    return h_s / 6.0 * mem + h_s ** 3 / 48.0 * ben


def koiter_energy_linearized(R: float, A: ElasticityTensor, h_s: float,
                             delta: ShellField, eta: ShellField, rule: SurfaceRule,
                             convention: str = AS_PRINTED) -> float:
    """K_delta(eta) built from the linearized tensors; equals K(eta) at delta = eta."""
    d = delta.plane_jets(rule.theta, rule.z)
    p = eta.plane_jets(rule.theta, rule.z)
    _check_gamma(R, d[(0, 0)])
    G = linearized_metric(R, d, p, convention)
    Rs = linearized_curvature(R, d, p)
    return h_s / 6.0 * rule.integrate(A.contract(G, G)) \
        + h_s ** 3 / 48.0 * rule.integrate(A.contract(Rs, Rs))


def koiter_form_linearized(R: float, A: ElasticityTensor, h_s: float,
                           delta: ShellField, eta: ShellField, xi: ShellField,
                           rule: SurfaceRule, convention: str = AS_PRINTED) -> float:
    """K_delta(eta, xi); affine in eta, recovers K(eta, xi) at delta = eta.

    Both the tensors and the derivative directions are linearized around
    delta: the integrands are A G_delta(eta) : G'(delta) xi and
    A Rsharp_delta(eta) : (Rsharp)'(delta) xi, so substituting delta = eta
    reproduces the coupled form entry by entry.
    """
    d = delta.plane_jets(rule.theta, rule.z)
    p = eta.plane_jets(rule.theta, rule.z)
    q = xi.plane_jets(rule.theta, rule.z)
    _check_gamma(R, d[(0, 0)])
    mem = rule.integrate(A.contract(linearized_metric(R, d, p, convention),
                                    metric_tensor_deriv(R, d, q)))
    ben = rule.integrate(A.contract(linearized_curvature(R, d, p),
                                    curvature_tensor_deriv(R, d, q)))
    return h_s / 6.0 * mem + h_s ** 3 / 48.0 * ben


def bending_energy_linear(eta: ShellField, rule: SurfaceRule) -> float:
    """(1/2) int |Hess eta|^2 over omega."""
    p = eta.plane_jets(rule.theta, rule.z)
    dens = p[(2, 0)] ** 2 + 2.0 * p[(1, 1)] ** 2 + p[(0, 2)] ** 2
    return 0.5 * rule.integrate(dens)


def bending_form(eta: ShellField, xi: ShellField, rule: SurfaceRule) -> float:
    """int Hess(eta) : Hess(xi) over omega."""
    p = eta.plane_jets(rule.theta, rule.z)
    q = xi.plane_jets(rule.theta, rule.z)
    dens = (p[(2, 0)] * q[(2, 0)] + 2.0 * p[(1, 1)] * q[(1, 1)]
            + p[(0, 2)] * q[(0, 2)])
    return rule.integrate(dens)
