"""Deformed-domain integrals of the weak formulation.

Every integral is evaluated by pullback to fixed reference quadrature with the
explicit change-of-variables factor ``detG / r`` (volume) or the area Jacobian
``J_delta`` (shell surface); no deformed meshes exist anywhere.  Interface
integrals use the identity e_r . n = R + delta, so the transport term needs no
normalization by J.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidSlipLength, ZeroDenominator
from .geometry import (CutoffProfile, MapJets, RefGrid, ReferenceGeometry,
                       SurfaceFrame, cyl_to_cart, surface_frame)
from .jets import Jet
from .quadrature import DiskRule, SurfaceRule, VolumeRule
from .shellbasis import ShellField
from .tables import FieldTables


@dataclass
class DeformedContext:
    """Quadrature grids plus geometry factors for one shell configuration delta."""

    geom: ReferenceGeometry
    rho: CutoffProfile
    vol_rule: VolumeRule
    surf_rule: SurfaceRule
    delta: ShellField
    delta_dt: ShellField | None = None
    disk_rules: tuple = ()
    vol_grid: RefGrid = field(init=False)
    surf_grid: RefGrid = field(init=False)
    vol_map: MapJets = field(init=False)
    surf_map: MapJets = field(init=False)
    frame: SurfaceFrame = field(init=False)

    def __post_init__(self):
        g = self.geom
        self.vol_grid = RefGrid.from_axes(self.vol_rule.r, self.vol_rule.theta, self.vol_rule.z)
        self.surf_grid = RefGrid.from_axes(np.array([g.R]), self.surf_rule.theta, self.surf_rule.z)
        self.vol_map = MapJets(g, self.rho, self.vol_grid, self.delta, self.delta_dt)
        self.surf_map = MapJets(g, self.rho, self.surf_grid, self.delta, self.delta_dt,
                                check=False)
        self.frame = surface_frame(g, self.delta, self.surf_rule.theta, self.surf_rule.z)
        if not self.disk_rules:
            nr, nth = len(self.vol_rule.r), len(self.vol_rule.theta)
            self.disk_rules = (DiskRule.build(nr, nth, g.R, 0.0),
                               DiskRule.build(nr, nth, g.R, g.L))
        self.w_def = self.vol_rule.w_param * np.broadcast_to(
            self.vol_map.detG.val, self.vol_grid.shape)
        self.w_surf = self.surf_rule.weights
        # plane tables of delta on the surface rule
        self.delta_plane = self.delta.plane_jets(self.surf_rule.theta, self.surf_rule.z)
        self.delta_dt_plane = (self.delta_dt.plane_jets(self.surf_rule.theta, self.surf_rule.z)
                               if self.delta_dt is not None else None)

    def volume_integral(self, density: np.ndarray) -> float:
        return float(np.sum(density * self.w_def))

    def surface_integral(self, density: np.ndarray) -> float:
        return float(np.sum(density * self.w_surf))


# -- volume forms ------------------------------------------------------------

def sym_grad_form(ctx: DeformedContext, u: FieldTables, q: FieldTables) -> float:
    """int_{Omega^delta} D(u) : D(q) dx."""
    return ctx.volume_integral(np.einsum("ab...,ab...->...", u.sym_grad, q.sym_grad))


def convective_form(ctx: DeformedContext, u: FieldTables, v: FieldTables,
                    w: FieldTables) -> float:
    """b = int (1/2) (u . grad) v . w - (1/2) (u . grad) w . v over Omega^delta."""
    adv_v = np.einsum("b...,ab...->a...", u.val, v.grad)
    adv_w = np.einsum("b...,ab...->a...", u.val, w.grad)
    dens = 0.5 * (np.einsum("a...,a...->...", adv_v, w.val)
                  - np.einsum("a...,a...->...", adv_w, v.val))
    return ctx.volume_integral(dens)


def mass_pairing(ctx: DeformedContext, u: FieldTables, q: FieldTables) -> float:
    """int_{Omega^delta} u . q dx."""
    return ctx.volume_integral(np.einsum("a...,a...->...", u.val, q.val))


# -- interface forms ---------------------------------------------------------

def _slip_difference(trace: np.ndarray, scalar_plane: np.ndarray) -> np.ndarray:
    out = np.array(trace, copy=True)
    out[0] = out[0] - scalar_plane
    return out


def slip_form(ctx: DeformedContext, u_trace: np.ndarray, dteta_plane: np.ndarray,
              q_trace: np.ndarray, xi_plane: np.ndarray, alpha: float) -> float:
    """(1/alpha) int_omega (u o phi - dt_eta e_r) . (q o phi - xi e_r) J_delta dA."""
    if alpha <= 0.0:
        raise InvalidSlipLength(f"slip length must be positive, got {alpha}")
    su = _slip_difference(u_trace, dteta_plane)
    sq = _slip_difference(q_trace, xi_plane)
    dens = np.einsum("a...,a...->...", su, sq) * ctx.frame.J
    return ctx.surface_integral(dens) / alpha


def interface_transport_form(ctx: DeformedContext, u_trace: np.ndarray,
                             q_trace: np.ndarray) -> float:
    """int_{Gamma^delta} (u . q) (dt_delta e_r o phi^-1) . nu dA_delta.

    With dA_delta = J dA and nu J = n this reduces to
    int_omega (u . q) dt_delta (R + delta) dA; the caller applies the +-1/2.
    """
    if ctx.delta_dt_plane is None:
        return 0.0
    dens = (np.einsum("a...,a...->...", u_trace, q_trace)
            * ctx.delta_dt_plane[(0, 0)]
            * (ctx.geom.R + ctx.delta_plane[(0, 0)]))
    return ctx.surface_integral(dens)


def forcing_term(ctx: DeformedContext, q_disk_in: np.ndarray, q_disk_out: np.ndarray,
                 P_in: float, P_out: float, normal_sign: float = 1.0) -> float:
    """P_in int_{Gamma_in} q . nu dA - P_out int_{Gamma_out} q . nu dA.

    nu is the outward normal of the reference cylinder (-e_z at z = 0, +e_z at
    z = L), optionally flipped by `normal_sign`.
    """
    rule_in, rule_out = ctx.disk_rules
    flux_in = rule_in.integrate(q_disk_in[2])
    flux_out = rule_out.integrate(q_disk_out[2])
    return float(normal_sign * (-P_in * flux_in - P_out * flux_out))


# -- norms and reports --------------------------------------------------------

def lp_norm(samples: np.ndarray, weights: np.ndarray, p: float) -> float:
    """L^p norm of nodal samples with positive quadrature weights; p = inf -> max."""
    mag = np.abs(samples)
    if mag.ndim == weights.ndim + 1:  # leading component axis
        mag = np.sqrt(np.sum(samples ** 2, axis=0))
    if np.isinf(p):
        return float(np.max(mag))
    return float(np.sum(mag ** p * weights) ** (1.0 / p))


def field_norm(ctx: DeformedContext, tables: FieldTables, p: float, k: int = 0) -> float:
    """L^p (k = 0) or W^{1,p} (k = 1) norm over the deformed volume."""
    n0 = lp_norm(tables.val, ctx.w_def, p)
    if k == 0:
        return n0
    g = np.sqrt(np.einsum("ab...,ab...->...", tables.grad, tables.grad))
    if np.isinf(p):
        return max(n0, float(np.max(g)))
    return (n0 ** p + lp_norm(g, ctx.w_def, p) ** p) ** (1.0 / p)


def shell_norm(rule: SurfaceRule, plane: dict, p: float, k: int = 0) -> float:
    """L^p / W^{1,p} norm of a shell field given by plane jets on the rule grid."""
    w = rule.weights
    n0 = lp_norm(plane[(0, 0)], w, p)
    if k == 0:
        return n0
    g = np.sqrt(plane[(1, 0)] ** 2 + plane[(0, 1)] ** 2)
    if np.isinf(p):
        return max(n0, float(np.max(g)))
    return (n0 ** p + lp_norm(g, w, p) ** p) ** (1.0 / p)


def energy_report(ctx: DeformedContext, u: FieldTables, u_trace: np.ndarray,
                  eta_elastic: float, dteta_plane: np.ndarray, alpha: float,
                  rho_f: float = 1.0, mu_f: float = 0.5, rho_s_h: float = 1.0) -> dict:
    """E, D, E_slip for the current state; elastic contribution supplied by model."""
    kinetic_fluid = 0.5 * rho_f * ctx.volume_integral(
        np.einsum("a...,a...->...", u.val, u.val))
    kinetic_shell = 0.5 * rho_s_h * ctx.surface_integral(dteta_plane ** 2)
    dissipation = 2.0 * mu_f * ctx.volume_integral(
        np.einsum("ab...,ab...->...", u.sym_grad, u.sym_grad))
    slip = slip_form(ctx, u_trace, dteta_plane, u_trace, dteta_plane, alpha)
    return {
        "E": kinetic_fluid + kinetic_shell + eta_elastic,
        "E_fluid": kinetic_fluid,
        "E_shell_kinetic": kinetic_shell,
        "E_shell_elastic": eta_elastic,
        "D": dissipation,
        "E_slip": slip,
    }


def boundary_cloud(ctx: DeformedContext, n_theta: int = 96, n_z: int = 64,
                   n_r: int = 24) -> np.ndarray:
    """Cartesian sample of the deformed boundary Gamma^delta plus the end disks."""
    g = ctx.geom
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    z = np.linspace(0.0, g.L, n_z)
    e = ctx.delta.eval(th[:, None], z[None, :])
    rr = g.R + e
    shell = np.stack([rr * np.cos(th)[:, None], rr * np.sin(th)[:, None],
                      np.broadcast_to(z, rr.shape)]).reshape(3, -1)
    rd = np.linspace(0.0, g.R, n_r)
    disks = []
    for zd in (0.0, g.L):
        x = rd[:, None] * np.cos(th)[None, :]
        y = rd[:, None] * np.sin(th)[None, :]
        disks.append(np.stack([x, y, np.full_like(x, zd)]).reshape(3, -1))
    return np.concatenate([shell] + disks, axis=1).T


def boundary_distance(ctx: DeformedContext) -> np.ndarray:
    """Distance of each deformed volume node to the sampled boundary."""
    cloud = boundary_cloud(ctx)
    tree = cKDTree(cloud)
    rp, th, z = ctx.vol_map.mapped_points()
    pts = np.stack([rp * np.cos(th), rp * np.sin(th), z]).reshape(3, -1).T
    d, _ = tree.query(pts, k=1)
    return d.reshape(ctx.vol_grid.shape)


def korn_ratio(ctx: DeformedContext, q: FieldTables, p: float, r: float,
               weighted_beta: float | None = None) -> dict:
    """||grad q||_{L^r} / (||D q||_{L^p} + ||q||_{L^p}) on Omega^delta.

    Optionally also reports the distance-weighted gradient norm
    ||d^{1-beta} grad q||_{L^p} with d the sampled distance to the boundary.
    """
    grad_mag = np.sqrt(np.einsum("ab...,ab...->...", q.grad, q.grad))
    sym = q.sym_grad
    sym_mag = np.sqrt(np.einsum("ab...,ab...->...", sym, sym))
    num = lp_norm(grad_mag, ctx.w_def, r)
    den = lp_norm(sym_mag, ctx.w_def, p) + lp_norm(q.val, ctx.w_def, p)
    if den == 0.0:
        raise ZeroDenominator("korn_ratio of the zero field")
    out = {"ratio": num / den, "grad_norm": num, "den": den}
    if weighted_beta is not None:
        d = boundary_distance(ctx)
        out["weighted_grad_norm"] = lp_norm(d ** (1.0 - weighted_beta) * grad_mag,
                                            ctx.w_def, p)
    return out


# -- closed-form physical fields (tests, Korn sampling) -----------------------

def physical_field(ctx: DeformedContext, spec: list, want_grad: bool = True) -> FieldTables:
    """Field of the deformed coordinates from separable closed-form terms.

    `spec` lists (component, radial_poly_coeffs, theta_wave, theta_phase, z_poly_coeffs);
    each term is poly(r'/R) * cos(k theta + phase) * poly(z/L) evaluated at the
    deformed radius r', with jet-exact gradients.
    """
    mj = ctx.vol_map
    grid = ctx.vol_grid
    R, L = ctx.geom.R, ctx.geom.L
    rp = mj.psi_r
    comps = [Jet(np.zeros(grid.shape), 0.0, 0.0, 0.0, None) for _ in range(3)]
    zax = grid.z
    for (c, rc, k, phase, zc) in spec:
        rpoly = np.polynomial.polynomial.Polynomial(rc)
        term_r = rp.apply(lambda x: rpoly(x / R), lambda x: rpoly.deriv()(x / R) / R)
        ct = np.cos(k * grid.theta + phase)
        st = np.sin(k * grid.theta + phase)
        term_th = Jet(ct, 0.0, -k * st, 0.0, None)
        zpoly = np.polynomial.polynomial.Polynomial(zc)
        term_z = Jet(zpoly(zax / L), 0.0, 0.0, zpoly.deriv()(zax / L) / L, None)
        comps[c] = comps[c] + term_r * term_th * term_z
    shape = grid.shape
    val = np.stack([np.broadcast_to(j.val, shape) for j in comps])
    grad = mj.deformed_gradient(*comps) if want_grad else None
    return FieldTables(val, grad, None)


def random_physical_field(ctx: DeformedContext, rng: np.random.Generator,
                          n_terms: int = 4) -> FieldTables:
    spec = []
    for _ in range(n_terms):
        c = int(rng.integers(0, 3))
        rc = rng.standard_normal(3)
        k = int(rng.integers(0, 3))
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        zc = rng.standard_normal(3)
        spec.append((c, rc, k, phase, zc))
    return physical_field(ctx, spec)


def rigid_rotation_field(ctx: DeformedContext, axis: str = "z") -> FieldTables:
    """omega x x in cylindrical components at the deformed nodes."""
    mj = ctx.vol_map
    grid = ctx.vol_grid
    rp, th, z = mj.mapped_points()
    if axis == "z":
        comps = (Jet(np.zeros(grid.shape), 0.0, 0.0, 0.0, None),
                 mj.psi_r, Jet(np.zeros(grid.shape), 0.0, 0.0, 0.0, None))
    else:
        # e_x x x = (0, -z, y): cylindrical components (-z sin th ... ) via jets
        zj = Jet(np.broadcast_to(grid.z, grid.shape).astype(float), 0.0, 0.0, 1.0, None)
        sj = Jet(np.broadcast_to(np.sin(th), grid.shape), 0.0,
                 np.broadcast_to(np.cos(th), grid.shape), 0.0, None)
        cj = Jet(np.broadcast_to(np.cos(th), grid.shape), 0.0,
                 np.broadcast_to(-np.sin(th), grid.shape), 0.0, None)
        comps = (-1.0 * zj * sj, -1.0 * zj * cj, mj.psi_r * sj)
    val = np.stack([np.broadcast_to(j.val, grid.shape) for j in comps])
    grad = mj.deformed_gradient(*comps)
    return FieldTables(val, grad, None)
