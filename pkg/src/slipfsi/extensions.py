"""Divergence-free extensions of shell test functions onto the deformed cylinder.

Two operators are provided.  The no-slip flavor prescribes the full trace
``xi e_r`` on the deformed shell; the slip flavor matches only the normal
trace and leaves a genuine tangential slip.  Both use a theta-antiderivative
to balance the radial divergence; that antiderivative is single-valued only
for integrands with zero theta-mean, so each operator splits off the
theta-mean of its integrand and routes it through an axisymmetric
stream-function lift whose flux exits through the end disks.  Tangential
traces on the disks stay exactly zero; the axial (normal) component there is
nonzero exactly when the net boundary flux demanded by ``xi`` is nonzero.

The slip builder is batched: a whole family of test functions is transported
in one pass with a leading mode axis (theta is always the second-to-last
array axis, so the Fourier antiderivative runs on axis -2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (CutoffProfile, MapJets, RefGrid, ReferenceGeometry,
                       _smoothstep5, require_admissible)
from .jets import Jet, jet_antideriv_theta, jet_mean_theta
from .quadrature import gauss_legendre
from .shellbasis import ShellBasis, ShellField
from .tables import FieldTables

THETA_AXIS = -2


class RampProfile:
    """C^2 quintic ramp from 0 to 1 on (lo, hi), constant outside."""

    def __init__(self, lo: float, hi: float):
        self.lo = lo
        self.hi = hi
        self.width = hi - lo

    def _t(self, r):
        return np.clip((np.asarray(r, dtype=float) - self.lo) / self.width, 0.0, 1.0)

    def __call__(self, r):
        return _smoothstep5(self._t(r))[0]

    def d1(self, r):
        return _smoothstep5(self._t(r))[1] / self.width

    def d2(self, r):
        return _smoothstep5(self._t(r))[2] / self.width ** 2


class SlipAux:
    """Per-grid evaluation tables reused across times and modes."""

    def __init__(self, basis: ShellBasis, grid: RefGrid, n_gauss: int = 16):
        th = grid.theta[0, :, 0]
        zz = grid.z[0, 0, :]
        self.plane = basis.plane_tables(th, zz)
        x, w = gauss_legendre(n_gauss, 0.0, 1.0)
        self.z_nodes = zz
        self.gl_w = w
        zeta = zz[:, None] * x[None, :]              # (nz, ng)
        self.T0 = basis.theta_tables(th)[0][basis._it_idx]          # (nm, nth)
        self.Zeta0 = basis.z_tables(zeta.ravel())[0][basis._jz_idx].reshape(
            basis.n_modes, *zeta.shape)               # (nm, nz, ng)


def _stack_plane_jets(fields, plane_tabs, dt_coeffs=None):
    """Plane jets of a family of shell fields with a leading mode axis."""
    C = np.stack([f.coeffs for f in fields])          # (nf, nm)

    def tab(key):
        return np.einsum("fm,mij->fij", C, plane_tabs[key])[:, None, :, :]

    dt = None
    if dt_coeffs is not None:
        dt = np.einsum("m,mij->ij", dt_coeffs, plane_tabs[(0, 0)])[None, None, :, :]
    return {
        "jet": Jet(tab((0, 0)), 0.0, tab((1, 0)), tab((0, 1)), dt),
        "coeffs": C,
    }


def _cumint(fn_vals: np.ndarray, gl_w: np.ndarray, z_nodes: np.ndarray) -> np.ndarray:
    """int_0^{z_j} f from per-node Gauss samples fn_vals (..., nz, ng)."""
    return np.einsum("...jg,g->...j", fn_vals, gl_w) * z_nodes


def extend_slip_family(geom: ReferenceGeometry, rho: CutoffProfile, grid: RefGrid,
                       eta: ShellField, xis: list, eta_dt: ShellField | None = None,
                       map_jets: MapJets | None = None, chi: RampProfile | None = None,
                       want_grad: bool = True, aux: SlipAux | None = None):
    """Slip extensions of a family of test functions, stacked on a leading axis.

    Returns (values (nf, 3, *grid), gradients (nf, 3, 3, *grid) | None,
    eulerian dt (nf, 3, *grid) | None, reference q jets).
    """
    require_admissible(geom, eta)
    mj = map_jets if map_jets is not None else MapJets(geom, rho, grid, eta, eta_dt)
    chi = chi if chi is not None else RampProfile(geom.a, geom.R - geom.b)
    basis = xis[0].basis
    aux = aux if aux is not None else SlipAux(basis, grid)
    R = geom.R

    xi_pack = _stack_plane_jets(xis, aux.plane)
    j_xi = xi_pack["jet"]
    C = xi_pack["coeffs"]
    dt_plane = None
    if eta_dt is not None:
        dt_plane = np.einsum("m,mij->ij", eta_dt.coeffs, aux.plane[(0, 0)])[None, None]
    p_eta = mj.eta_plane
    j_eta = Jet(p_eta[(0, 0)][None, None], 0.0, p_eta[(1, 0)][None, None],
                p_eta[(0, 1)][None, None], dt_plane)

    r4 = grid.r[None]  # (1, nr, 1, 1)
    j_r = Jet(r4.astype(float), 1.0, 0.0, 0.0, None)
    j_rho = Jet(rho(r4), rho.d1(r4), 0.0, 0.0, None)
    j_rhop = Jet(rho.d1(r4), rho.d2(r4), 0.0, 0.0, None)

    # Q_r = (r + eta_tilde) xi / R, h = d_r(r Q_r); the antiderivative of the
    # mean-free part of h supplies the azimuthal balance beta
    Q_r = (j_r + j_rho * j_eta) * j_xi * (1.0 / R)
    h = (2.0 * j_r + (j_rho + j_r * j_rhop) * j_eta) * j_xi * (1.0 / R)
    beta = -1.0 * jet_antideriv_theta(h - jet_mean_theta(h, THETA_AXIS), THETA_AXIS)
    q_r_prime = Q_r - jet_mean_theta(Q_r, THETA_AXIS)

    # axisymmetric stream-function lift of the theta-mean of the wall trace
    gbar = jet_mean_theta((R + j_eta) * j_xi * (1.0 / R), THETA_AXIS)
    eta_zeta = np.einsum("m,mt,mjg->tjg", eta.coeffs, aux.T0, aux.Zeta0)
    xi_zeta = np.einsum("fm,mt,mjg->ftjg", C, aux.T0, aux.Zeta0)
    gbar_zeta = np.mean((R + eta_zeta)[None] * xi_zeta, axis=1) / R     # (nf, nz, ng)
    W_val = -R * _cumint(gbar_zeta, aux.gl_w, aux.z_nodes)
    W_dt = None
    if eta_dt is not None:
        deta_zeta = np.einsum("m,mt,mjg->tjg", eta_dt.coeffs, aux.T0, aux.Zeta0)
        gdt = np.mean(deta_zeta[None] * xi_zeta, axis=1) / R
        W_dt = (-R * _cumint(gdt, aux.gl_w, aux.z_nodes))[:, None, None, :]
    W = Jet(W_val[:, None, None, :], 0.0, 0.0, -R * gbar.val, W_dt)

    j_chi = Jet(chi(r4), chi.d1(r4), 0.0, 0.0, None)
    j_chip = Jet(chi.d1(r4), chi.d2(r4), 0.0, 0.0, None)
    inv_r = j_r.reciprocal()
    q_r = q_r_prime + R * j_chi * inv_r * gbar
    q_z = j_chip * inv_r * W

    v = mj.piola_push(q_r, beta, q_z)
    nf = len(xis)
    shape = (nf,) + grid.shape
    val = np.stack([np.broadcast_to(j.val, shape) for j in v], axis=1)
    grad = None
    dt = None
    if want_grad:
        grad = np.moveaxis(mj.deformed_gradient(*v), 2, 0)     # (nf, 3, 3, *grid)
        if eta_dt is not None:
            dt = np.moveaxis(mj.eulerian_dt(v, np.moveaxis(grad, 0, 2)), 1, 0)
    return val, grad, dt, (q_r, beta, q_z)


@dataclass
class ExtensionResult:
    """Transported tables plus the reference-side construction for diagnostics."""

    tables: FieldTables
    q_jets: tuple | None = None


def extend_slip(geom: ReferenceGeometry, rho: CutoffProfile, grid: RefGrid,
                eta: ShellField, xi: ShellField, eta_dt: ShellField | None = None,
                map_jets: MapJets | None = None, chi: RampProfile | None = None,
                want_grad: bool = True, aux: SlipAux | None = None) -> ExtensionResult:
    """Slip extension of a single test function (see extend_slip_family)."""
    val, grad, dt, q = extend_slip_family(geom, rho, grid, eta, [xi], eta_dt,
                                          map_jets, chi, want_grad, aux)
    return ExtensionResult(
        FieldTables(val[0], None if grad is None else grad[0],
                    None if dt is None else dt[0]),
        q_jets=q)


def extend_noslip(geom: ReferenceGeometry, rho: CutoffProfile, grid: RefGrid,
                  delta: ShellField, xi: ShellField, M: float | None = None,
                  map_jets: MapJets | None = None,
                  want_grad: bool = True) -> ExtensionResult:
    """No-slip extension: divergence-free with full trace xi e_r on Gamma^delta."""
    sup = require_admissible(geom, delta)
    if M is None:
        M = delta.bound if np.isfinite(delta.bound) else min(1.05 * sup + 1e-9, 0.9 * geom.R)
    mj = map_jets if map_jets is not None else MapJets(geom, rho, grid, delta, None)
    alpha1 = RampProfile(0.5 * (geom.R - M), geom.R - M)

    th = grid.theta[0, :, 0]
    zz = grid.z[0, 0, :]
    n_theta = th.shape[0]
    p_xi = xi.plane_jets(th, zz)
    j_xi = Jet(p_xi[(0, 0)][None], 0.0, p_xi[(1, 0)][None], p_xi[(0, 1)][None], None)
    p_d = mj.eta_plane
    j_delta = Jet(p_d[(0, 0)][None], 0.0, p_d[(1, 0)][None], p_d[(0, 1)][None], None)

    integrand = (geom.R + j_delta) * j_xi
    mbar = jet_mean_theta(integrand, THETA_AXIS)
    B = jet_antideriv_theta(integrand - mbar, THETA_AXIS)

    x, w = gauss_legendre(16, 0.0, 1.0)
    zeta = zz[:, None] * x[None, :]
    d_zeta = delta.eval(th[:, None, None], zeta[None, :, :])
    x_zeta = xi.eval(th[:, None, None], zeta[None, :, :])
    mbar_zeta = np.mean((geom.R + d_zeta) * x_zeta, axis=0)
    Mtilde_val = _cumint(mbar_zeta, w, zz)
    Mtilde = Jet(Mtilde_val[None, None, :], 0.0, 0.0, mbar.val, None)

    rp = mj.psi_r  # deformed radius jet
    a1 = rp.apply(alpha1, alpha1.d1)
    a1p = rp.apply(alpha1.d1, alpha1.d2)
    inv_rp = rp.reciprocal()

    F_r = (geom.R + j_delta) * inv_rp * a1 * j_xi
    F_th = -1.0 * a1p * B
    F_z = -1.0 * a1p * inv_rp * Mtilde

    v = (F_r, F_th, F_z)
    shape = np.broadcast_shapes(*(np.shape(j.val) for j in v))
    val = np.stack([np.broadcast_to(j.val, shape) for j in v])
    grad = mj.deformed_gradient(*v) if want_grad else None
    return ExtensionResult(FieldTables(val, grad, None), q_jets=v)
