"""Interleaved Galerkin basis and the implicit-midpoint advance of the decoupled system.

The trial family interleaves slip extensions of shell modes (odd positions,
carrying a scalar shell part) with Piola transports of the reference fluid
modes (even positions, scalar part zero).  The coefficients a(t) solve

    M(t) a'' + [2 mu_f A + rho_f (N + Gamma + B) + S_slip] a' + elastic(a) = f(t)

assembled at the midpoint of every step; the basis is time-dependent through
the prescribed motion delta(t), and its Eulerian time derivative enters via N.
Testing the system with a' yields the discrete energy balance; the ledger
recomputes every term of that identity, so its residual measures only the
time-integration error (O(dt^2) for the midpoint rule).  With the nonlinear
shell model the elastic terms use the delta-linearized Koiter form, and the
ledger residual additionally carries the linearization defect when delta
differs from eta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContactStop, SingularSystem
from .extensions import SlipAux, extend_slip_family
from .fluidbasis import FluidReferenceBasis
from .forcing import PressureProfile
from .forms import DeformedContext, forcing_term
from .geometry import CutoffProfile, MapJets, RefGrid, ReferenceGeometry
from .jets import Jet
from .koiter import (AS_PRINTED, ElasticityTensor, koiter_energy,
                     koiter_form_linearized)
from .quadrature import DiskRule, SurfaceRule, VolumeRule
from .shellbasis import ShellBasis, ShellField, bending_gram
from .tables import FieldTables

LINEAR = "linear"
NONLINEAR = "nonlinear-koiter"


@dataclass(frozen=True)
class PhysicalParams:
    rho_f: float = 1.0
    mu_f: float = 0.5
    rho_s_h: float = 1.0  # rho_s * h_s
    alpha: float = 1.0
    shell_model: str = LINEAR
    h_s: float = 1.0
    lam_s: float = 1.0
    mu_s: float = 1.0
    metric_convention: str = AS_PRINTED
    inflow_normal_sign: float = 1.0

    @property
    def elasticity(self) -> ElasticityTensor:
        return ElasticityTensor(self.lam_s, self.mu_s)


class PrescribedMotion:
    """Shell motion delta(t) given by smooth coefficient callables."""

    def __init__(self, basis: ShellBasis, coeff_fn, rate_fn, bound: float):
        self.basis = basis
        self.coeff_fn = coeff_fn
        self.rate_fn = rate_fn
        self.bound = bound

    @classmethod
    def constant(cls, field0: ShellField) -> "PrescribedMotion":
        c = np.array(field0.coeffs, copy=True)
        zero = np.zeros_like(c)
        return cls(field0.basis, lambda t: c, lambda t: zero, field0.bound)

    def field(self, t: float) -> ShellField:
        return ShellField(self.basis, self.coeff_fn(t), self.bound)

    def rate(self, t: float) -> ShellField:
        return ShellField(self.basis, self.rate_fn(t), np.inf)


def _stack_mode_jets(mode_jets) -> tuple:
    """Stack a list of component-jet triples along a leading mode axis."""
    out = []
    for c in range(3):
        slots = []
        for slot in ("val", "dr", "dth", "dz"):
            arrs = [np.asarray(getattr(j[c], slot), dtype=float) for j in mode_jets]
            shape = np.broadcast_shapes(*(a.shape for a in arrs))
            slots.append(np.stack([np.broadcast_to(a, shape) for a in arrs]))
        out.append(Jet(slots[0], slots[1], slots[2], slots[3], None))
    return tuple(out)


@dataclass
class BasisTables:
    """Stacked nodal tables of the n interleaved modes at one time slice."""

    vol_val: np.ndarray                  # (n, 3, nr, nth, nz)
    vol_grad: np.ndarray | None          # (n, 3, 3, nr, nth, nz)
    vol_dt: np.ndarray | None            # (n, 3, nr, nth, nz)
    surf: np.ndarray | None              # (n, 3, nth_s, nz_s)
    disk_in: np.ndarray | None           # (n, 3, nr_d, nth_d)
    disk_out: np.ndarray | None

    def velocity(self, weights: np.ndarray) -> FieldTables:
        val = np.einsum("k,ka...->a...", weights, self.vol_val)
        grad = (np.einsum("k,kab...->ab...", weights, self.vol_grad)
                if self.vol_grad is not None else None)
        return FieldTables(val, grad, None)


class GalerkinSetup:
    """Grids, reference bases and constant matrices shared by all time steps."""

    def __init__(self, geom: ReferenceGeometry, shell_basis: ShellBasis,
                 fluid_basis: FluidReferenceBasis, vol_rule: VolumeRule,
                 surf_rule: SurfaceRule, n_modes: int, params: PhysicalParams,
                 margin: float | None = None):
        self.geom = geom
        self.rho = CutoffProfile(geom)
        self.shell_basis = shell_basis
        self.fluid_basis = fluid_basis
        self.vol_rule = vol_rule
        self.surf_rule = surf_rule
        self.n = n_modes
        self.n_shell = (n_modes + 1) // 2   # odd slots; odd n keeps shell modes only
        self.n_fluid = n_modes // 2
        if self.n_shell > shell_basis.n_modes or self.n_fluid > fluid_basis.m:
            raise ValueError("mode count exceeds the available basis sizes")
        self.params = params
        self.margin = geom.margin_default if margin is None else margin

        self.disk_rules = (DiskRule.build(len(vol_rule.r), len(vol_rule.theta), geom.R, 0.0),
                           DiskRule.build(len(vol_rule.r), len(vol_rule.theta), geom.R, geom.L))
        self.disk_grids = tuple(RefGrid.from_axes(dr.r, dr.theta, np.array([dr.z]))
                                for dr in self.disk_rules)
        self.vol_grid = RefGrid.from_axes(vol_rule.r, vol_rule.theta, vol_rule.z)
        self.surf_grid = RefGrid.from_axes(np.array([geom.R]), surf_rule.theta, surf_rule.z)

        eye = np.eye(shell_basis.n_modes)
        self.shell_modes = [ShellField(shell_basis, eye[j], np.inf)
                            for j in range(self.n_shell)]
        bg = bending_gram(shell_basis, surf_rule.theta, surf_rule.w_theta,
                          surf_rule.z, surf_rule.w_z)
        self.bending_block = bg[:self.n_shell, :self.n_shell]
        self.scalar_planes = shell_basis.plane_tables(
            surf_rule.theta, surf_rule.z)[(0, 0)][:self.n_shell]

        self.slip_aux = {"vol": SlipAux(shell_basis, self.vol_grid),
                         "surf": SlipAux(shell_basis, self.surf_grid),
                         "disk0": SlipAux(shell_basis, self.disk_grids[0]),
                         "disk1": SlipAux(shell_basis, self.disk_grids[1])}
        if self.n_fluid:
            mf = range(self.n_fluid)
            self.fluid_jets = {
                "vol": _stack_mode_jets([fluid_basis.mode_jets(self.vol_grid, k) for k in mf]),
                "surf": _stack_mode_jets([fluid_basis.mode_jets(self.surf_grid, k) for k in mf]),
                "disk0": _stack_mode_jets([fluid_basis.mode_jets(self.disk_grids[0], k) for k in mf]),
                "disk1": _stack_mode_jets([fluid_basis.mode_jets(self.disk_grids[1], k) for k in mf]),
            }
        else:
            self.fluid_jets = None

    # -- per-time assembly --------------------------------------------------
    def context(self, delta: ShellField, delta_dt: ShellField | None) -> DeformedContext:
        return DeformedContext(self.geom, self.rho, self.vol_rule, self.surf_rule,
                               delta, delta_dt, disk_rules=self.disk_rules)

    def _interleave(self, shell_arr, fluid_arr):
        if fluid_arr is None:
            return shell_arr
        shape = (self.n,) + shell_arr.shape[1:]
        out = np.zeros(shape, dtype=shell_arr.dtype)
        out[0::2] = shell_arr
        out[1::2] = fluid_arr
        return out

    def _transport_fluid(self, mj: MapJets, key: str, want_grad: bool, want_dt: bool):
        if self.fluid_jets is None:
            return None, None, None
        jets = self.fluid_jets[key]
        v = mj.piola_push(*jets)
        shape = (self.n_fluid,) + mj.grid.shape
        val = np.stack([np.broadcast_to(j.val, shape) for j in v], axis=1)
        grad = dt = None
        if want_grad:
            grad6 = mj.deformed_gradient(*v)           # (3, 3, nf, *grid)
            grad = np.moveaxis(grad6, 2, 0)            # (nf, 3, 3, *grid)
            if want_dt and mj.eta_t.dt is not None:
                # the push already carries the product-rule dt of the map factors
                dt = np.moveaxis(mj.eulerian_dt(v, grad6), 1, 0)
        return val, grad, dt

    def basis_tables(self, ctx: DeformedContext, want_grad: bool = True,
                     want_dt: bool = True, surfaces: bool = True) -> BasisTables:
        xis = self.shell_modes
        eta_dt = ctx.delta_dt if want_dt else None
        sv, sg, sdt, _ = extend_slip_family(
            self.geom, self.rho, self.vol_grid, ctx.delta, xis, eta_dt,
            map_jets=ctx.vol_map, want_grad=want_grad, aux=self.slip_aux["vol"])
        fv, fg, fdt = self._transport_fluid(ctx.vol_map, "vol", want_grad, want_dt)
        vol_val = self._interleave(sv, fv)
        vol_grad = self._interleave(sg, fg) if want_grad else None
        vol_dt = None
        if want_grad and want_dt and ctx.delta_dt is not None:
            if fdt is None and fv is not None:
                fdt = np.zeros_like(fv)
            vol_dt = self._interleave(sdt, fdt)

        surf = disk_in = disk_out = None
        if surfaces:
            ssurf, _, _, _ = extend_slip_family(
                self.geom, self.rho, self.surf_grid, ctx.delta, xis, None,
                map_jets=ctx.surf_map, want_grad=False, aux=self.slip_aux["surf"])
            fsurf, _, _ = self._transport_fluid(ctx.surf_map, "surf", False, False)
            surf = self._interleave(ssurf, fsurf)[:, :, 0]       # (n, 3, nth, nz)
            disks = []
            for i, grid in enumerate(self.disk_grids):
                mj = MapJets(self.geom, self.rho, grid, ctx.delta, None, check=False)
                sd, _, _, _ = extend_slip_family(
                    self.geom, self.rho, grid, ctx.delta, xis, None,
                    map_jets=mj, want_grad=False, aux=self.slip_aux[f"disk{i}"])
                fd, _, _ = self._transport_fluid(mj, f"disk{i}", False, False)
                disks.append(self._interleave(sd, fd)[:, :, :, :, 0])  # (n, 3, nr, nth)
            disk_in, disk_out = disks
        return BasisTables(vol_val, vol_grad, vol_dt, surf, disk_in, disk_out)

    def shell_part(self, a: np.ndarray) -> np.ndarray:
        """Full shell-basis coefficients of eta_n from the interleaved vector."""
        coeffs = np.zeros(self.shell_basis.n_modes)
        coeffs[:self.n_shell] = a[0::2][:self.n_shell]
        return coeffs

    def eta_field(self, a: np.ndarray, bound: float | None = None) -> ShellField:
        return ShellField(self.shell_basis, self.shell_part(a),
                          self.geom.R if bound is None else bound)


@dataclass
class AssembledSystem:
    """Matrices of one time slice of the decoupled, linearized system."""

    M: np.ndarray
    A_visc: np.ndarray
    N_basis: np.ndarray
    Gamma: np.ndarray
    S_slip: np.ndarray
    B_conv: np.ndarray
    L_elastic: np.ndarray
    c_elastic: np.ndarray
    f: np.ndarray
    min_eig_M: float

    @property
    def Q(self) -> np.ndarray:
        return self.A_visc + self.N_basis + self.Gamma + self.S_slip + self.B_conv


def assemble(setup: GalerkinSetup, ctx: DeformedContext, tabs: BasisTables,
             v_tables: FieldTables | None, P_in: float, P_out: float,
             with_eig: bool = True) -> AssembledSystem:
    p = setup.params
    n = setup.n
    w_def = ctx.w_def
    V = tabs.vol_val
    M = p.rho_f * np.einsum("kaxyz,laxyz,xyz->kl", V, V, w_def)
    idx = np.arange(0, n, 2)
    M[idx, idx] += p.rho_s_h  # orthonormal shell Gram

    S = 0.5 * (tabs.vol_grad + np.swapaxes(tabs.vol_grad, 1, 2))
    A_visc = 2.0 * p.mu_f * np.einsum("kabxyz,labxyz,xyz->kl", S, S, w_def)

    if tabs.vol_dt is None:
        N = np.zeros((n, n))
    else:
        # N[k, j] = rho_f * int dt(X_j) . X_k
        N = p.rho_f * np.einsum("jaxyz,kaxyz,xyz->kj", tabs.vol_dt, V, w_def)

    traces = tabs.surf
    slips = traces.copy()
    slips[idx, 0] -= setup.scalar_planes
    Jw = ctx.frame.J * ctx.w_surf
    S_slip = np.einsum("kaij,laij,ij->kl", slips, slips, Jw) / p.alpha

    if ctx.delta_dt_plane is not None:
        gw = (ctx.delta_dt_plane[(0, 0)] * (setup.geom.R + ctx.delta_plane[(0, 0)])
              * ctx.w_surf)
        Gamma = 0.5 * p.rho_f * np.einsum("kaij,laij,ij->kl", traces, traces, gw)
    else:
        Gamma = np.zeros((n, n))

    if v_tables is not None:
        adv_v = np.einsum("kbxyz,abxyz->kaxyz", V, v_tables.grad)
        adv_X = np.einsum("kbxyz,labxyz->klaxyz", V, tabs.vol_grad)
        B = 0.5 * p.rho_f * (np.einsum("kaxyz,laxyz,xyz->kl", adv_v, V, w_def)
                             - np.einsum("klaxyz,axyz,xyz->kl", adv_X,
                                         v_tables.val, w_def))
        B = B.T  # row k tests with X_k: B[k, j] = b(X_j, v, X_k)
    else:
        B = np.zeros((n, n))

    L = np.zeros((n, n))
    c = np.zeros(n)
    if p.shell_model == LINEAR:
        L[np.ix_(idx, idx)] = setup.bending_block
    else:
        A_el = p.elasticity
        zero = ShellField(setup.shell_basis, np.zeros(setup.shell_basis.n_modes))
        base = np.array([koiter_form_linearized(setup.geom.R, A_el, p.h_s, ctx.delta,
                                                zero, setup.shell_modes[k],
                                                setup.surf_rule, p.metric_convention)
                         for k in range(setup.n_shell)])
        for j in range(setup.n_shell):
            for k in range(setup.n_shell):
                val = koiter_form_linearized(setup.geom.R, A_el, p.h_s, ctx.delta,
                                             setup.shell_modes[j], setup.shell_modes[k],
                                             setup.surf_rule, p.metric_convention)
                L[2 * k, 2 * j] = val - base[k]
        c[idx] = base

    f = np.array([forcing_term(ctx, tabs.disk_in[k], tabs.disk_out[k],
                               P_in, P_out, p.inflow_normal_sign)
                  for k in range(n)])
    min_eig = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min()) if with_eig else np.nan
    return AssembledSystem(M, A_visc, N, Gamma, S_slip, B, L, c, f, min_eig)


@dataclass
class Trajectory:
    times: np.ndarray                       # endpoint times, len n_steps + 1
    a: np.ndarray                           # (n_steps + 1, n)
    adot: np.ndarray
    ledger: list = field(default_factory=list)
    u_mid: list = field(default_factory=list)   # per-step float32 (val, grad) tables
    t_star: float | None = None
    projection_residuals: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def shell_elastic_energy(setup: GalerkinSetup, a: np.ndarray) -> float:
    p = setup.params
    if p.shell_model == LINEAR:
        ash = a[0::2][:setup.n_shell]
        return 0.5 * float(ash @ setup.bending_block @ ash)
    eta = setup.eta_field(a)
    return 0.5 * koiter_energy(setup.geom.R, p.elasticity, p.h_s, eta,
                               setup.surf_rule, p.metric_convention)


class DecoupledRunner:
    """Advance the decoupled/linearized system over [0, T] for a prescribed motion."""

    def __init__(self, setup: GalerkinSetup, motion: PrescribedMotion,
                 P_in: PressureProfile, P_out: PressureProfile,
                 v_provider=None, store_velocity: bool = False):
        self.setup = setup
        self.motion = motion
        self.P_in = P_in
        self.P_out = P_out
        self.v_provider = v_provider
        self.store_velocity = store_velocity

    def _fluid_mass_at(self, t: float) -> np.ndarray:
        """Value-only fluid mass matrix at an endpoint time (for ledger energies)."""
        ctx = self.setup.context(self.motion.field(t), None)
        tabs = self.setup.basis_tables(ctx, want_grad=False, want_dt=False,
                                       surfaces=False)
        V = tabs.vol_val
        return np.einsum("kaxyz,laxyz,xyz->kl", V, V, ctx.w_def)

    def initial_state(self, eta0: np.ndarray, eta1: np.ndarray,
                      u0_fluid: np.ndarray | None):
        """Project the initial data onto the interleaved basis (joint L2)."""
        setup = self.setup
        p = setup.params
        n = setup.n
        a0 = np.zeros(n)
        a0[0::2] = eta0[:setup.n_shell]
        ctx = setup.context(self.motion.field(0.0), None)
        tabs = setup.basis_tables(ctx, want_grad=False, want_dt=False, surfaces=False)
        V = tabs.vol_val
        M = p.rho_f * np.einsum("kaxyz,laxyz,xyz->kl", V, V, ctx.w_def)
        idx = np.arange(0, n, 2)
        M[idx, idx] += p.rho_s_h
        rhs = np.zeros(n)
        rhs[idx] += p.rho_s_h * eta1[:setup.n_shell]
        u0_tab = None
        if u0_fluid is not None and np.any(u0_fluid) and setup.fluid_jets is not None:
            v = ctx.vol_map.piola_push(*setup.fluid_jets["vol"])
            shape = (setup.n_fluid,) + setup.vol_grid.shape
            stacked = np.stack([np.broadcast_to(j.val, shape) for j in v], axis=1)
            u0_tab = np.einsum("f,faxyz->axyz",
                               np.asarray(u0_fluid, dtype=float)[:setup.n_fluid], stacked)
            rhs += p.rho_f * np.einsum("kaxyz,axyz,xyz->k", V, u0_tab, ctx.w_def)
        adot0 = np.linalg.solve(M, rhs)
        res = {}
        if u0_tab is not None:
            diff = np.einsum("k,kaxyz->axyz", adot0, V) - u0_tab
            res["u0"] = float(np.sqrt(np.sum(diff ** 2 * ctx.w_def)))
        dte = np.einsum("k,kij->ij", adot0[idx], setup.scalar_planes)
        target = np.einsum("k,kij->ij", eta1[:setup.n_shell], setup.scalar_planes)
        res["eta1"] = float(np.sqrt(np.sum((dte - target) ** 2
                                           * setup.surf_rule.weights)))
        return a0, adot0, res

    def run(self, T: float, dt: float, eta0=None, eta1=None, u0_fluid=None,
            raise_on_contact: bool = False) -> Trajectory:
        setup = self.setup
        n = setup.n
        n_steps = int(round(T / dt))
        times = dt * np.arange(n_steps + 1)
        nb = setup.shell_basis.n_modes
        eta0 = np.zeros(nb) if eta0 is None else np.asarray(eta0, dtype=float)
        eta1 = np.zeros(nb) if eta1 is None else np.asarray(eta1, dtype=float)

        a = np.zeros((n_steps + 1, n))
        adot = np.zeros((n_steps + 1, n))
        a[0], adot[0], proj = self.initial_state(eta0, eta1, u0_fluid)
        traj = Trajectory(times, a, adot, projection_residuals=proj)

        E_prev = self._energy(a[0], adot[0], self._fluid_mass_at(0.0))

        for j in range(n_steps):
            t_m = times[j] + 0.5 * dt
            ctx = setup.context(self.motion.field(t_m), self.motion.rate(t_m))
            tabs = setup.basis_tables(ctx)
            v_tab = self.v_provider.tables(j) if self.v_provider is not None else None
            sys_m = assemble(setup, ctx, tabs, v_tab, float(self.P_in(t_m)),
                             float(self.P_out(t_m)))

            lhs = (2.0 / dt) * sys_m.M + sys_m.Q + 0.5 * dt * sys_m.L_elastic
            rhs = (sys_m.f - sys_m.c_elastic - sys_m.L_elastic @ a[j]
                   + (2.0 / dt) * (sys_m.M @ adot[j]))
            try:
                adot_mid = np.linalg.solve(lhs, rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularSystem(f"step {j} at t = {t_m:.6g}: {exc}") from exc
            a[j + 1] = a[j] + dt * adot_mid
            adot[j + 1] = 2.0 * adot_mid - adot[j]
            a_mid = 0.5 * (a[j] + a[j + 1])

            E_new = self._energy(a[j + 1], adot[j + 1],
                                 self._fluid_mass_at(times[j + 1]))
            D = float(adot_mid @ sys_m.A_visc @ adot_mid)
            E_slip = float(adot_mid @ sys_m.S_slip @ adot_mid)
            conv_work = float(adot_mid @ sys_m.B_conv @ adot_mid)
            elastic_power = float(adot_mid @ (sys_m.L_elastic @ a_mid + sys_m.c_elastic))
            work = float(sys_m.f @ adot_mid)
            residual = abs((E_new - E_prev) / dt + D + E_slip + conv_work - work)

            eta_next = setup.eta_field(a[j + 1])
            lo, hi = eta_next.extrema(96, 48)
            sup_eta = max(abs(lo), abs(hi))
            gap = setup.geom.R + lo  # min over the dense grid of R + eta
            traj.ledger.append({
                "t": times[j + 1], "E": E_new, "D": D, "E_slip": E_slip,
                "work": work, "conv_work": conv_work, "elastic_power": elastic_power,
                "balance_residual": residual, "min_eig_M": sys_m.min_eig_M,
                "sup_eta": sup_eta,
            })

            if self.store_velocity:
                u = tabs.velocity(adot_mid)
                traj.u_mid.append((u.val.astype(np.float32),
                                   u.grad.astype(np.float32)))

            if gap < setup.margin:
                traj.times = times[:j + 1]
                traj.a = a[:j + 1]
                traj.adot = adot[:j + 1]
                traj.t_star = float(times[j + 1])
                if self.store_velocity and traj.u_mid:
                    traj.u_mid.pop()
                if traj.ledger:
                    traj.ledger.pop()
                if raise_on_contact:
                    raise ContactStop(
                        f"contact margin reached at t = {traj.t_star:.6g}", traj.t_star)
                return traj
            E_prev = E_new
        return traj

    def _energy(self, a: np.ndarray, adot: np.ndarray, M_fl: np.ndarray) -> float:
        p = self.setup.params
        kin_fluid = 0.5 * p.rho_f * float(adot @ M_fl @ adot)
        ash = adot[0::2][:self.setup.n_shell]
        kin_shell = 0.5 * p.rho_s_h * float(ash @ ash)
        return kin_fluid + kin_shell + shell_elastic_energy(self.setup, a)


def discrete_energy_balance(traj: Trajectory) -> dict:
    """Max and L1 summary of the per-step balance residuals, relative to max E."""
    if not traj.ledger:
        return {"max_residual": 0.0, "l1_residual": 0.0, "max_E": 0.0,
                "max_relative": 0.0}
    res = np.array([row["balance_residual"] for row in traj.ledger])
    E = np.array([row["E"] for row in traj.ledger])
    scale = max(float(E.max()), 1e-300)
    return {"max_residual": float(res.max()),
            "l1_residual": float(res.sum() * traj.dt),
            "max_E": float(E.max()),
            "max_relative": float(res.max() / scale)}


def weak_residual(runner: DecoupledRunner, traj: Trajectory, phi,
                  xi_out: ShellField | None = None) -> dict:
    """Time-integrated weak-form residuals for in-basis and out-of-basis test pairs.

    In-basis residuals reproduce the solved rows (Galerkin orthogonality); the
    optional out-of-basis pair (F^s(xi), xi) measures how far xi sits from the
    resolved shell space.
    """
    from .extensions import extend_slip
    from .koiter import bending_form

    setup = runner.setup
    p = setup.params
    dt = traj.dt
    n_steps = len(traj.times) - 1
    in_res = np.zeros(setup.n)
    out_res = 0.0
    for j in range(n_steps):
        t_m = traj.times[j] + 0.5 * dt
        ctx = setup.context(runner.motion.field(t_m), runner.motion.rate(t_m))
        tabs = setup.basis_tables(ctx)
        v_tab = runner.v_provider.tables(j) if runner.v_provider is not None else None
        sys_m = assemble(setup, ctx, tabs, v_tab, float(runner.P_in(t_m)),
                         float(runner.P_out(t_m)), with_eig=False)
        adot_mid = 0.5 * (traj.adot[j] + traj.adot[j + 1])
        addot_mid = (traj.adot[j + 1] - traj.adot[j]) / dt
        a_mid = 0.5 * (traj.a[j] + traj.a[j + 1])
        row = (sys_m.M @ addot_mid + sys_m.Q @ adot_mid
               + sys_m.L_elastic @ a_mid + sys_m.c_elastic - sys_m.f)
        in_res += dt * phi(t_m) * row
        if xi_out is None:
            continue
        q_vol = extend_slip(setup.geom, setup.rho, setup.vol_grid, ctx.delta,
                            xi_out, ctx.delta_dt, map_jets=ctx.vol_map,
                            aux=setup.slip_aux["vol"]).tables
        q_surf = extend_slip(setup.geom, setup.rho, setup.surf_grid, ctx.delta,
                             xi_out, None, map_jets=ctx.surf_map, want_grad=False,
                             aux=setup.slip_aux["surf"]).tables.val[:, 0]
        q_disks = []
        for i, grid in enumerate(setup.disk_grids):
            mj = MapJets(setup.geom, setup.rho, grid, ctx.delta, None, check=False)
            q_disks.append(extend_slip(setup.geom, setup.rho, grid, ctx.delta,
                                       xi_out, None, map_jets=mj, want_grad=False,
                                       aux=setup.slip_aux[f"disk{i}"]
                                       ).tables.val[:, :, :, 0])
        w_def = ctx.w_def
        u_val = np.einsum("k,kaxyz->axyz", adot_mid, tabs.vol_val)
        u_grad = np.einsum("k,kabxyz->abxyz", adot_mid, tabs.vol_grad)
        du_val = np.einsum("k,kaxyz->axyz", addot_mid, tabs.vol_val)
        if tabs.vol_dt is not None:
            du_val = du_val + np.einsum("k,kaxyz->axyz", adot_mid, tabs.vol_dt)
        term = p.rho_f * float(np.einsum("axyz,axyz,xyz->", du_val, q_vol.val, w_def))
        sym_u = 0.5 * (u_grad + np.swapaxes(u_grad, 0, 1))
        term += 2.0 * p.mu_f * float(np.einsum("abxyz,abxyz,xyz->",
                                               sym_u, q_vol.sym_grad, w_def))
        if v_tab is not None:
            adv_v = np.einsum("bxyz,abxyz->axyz", u_val, v_tab.grad)
            adv_q = np.einsum("bxyz,abxyz->axyz", u_val, q_vol.grad)
            term += 0.5 * p.rho_f * float(
                np.einsum("axyz,axyz,xyz->", adv_v, q_vol.val, w_def)
                - np.einsum("axyz,axyz,xyz->", adv_q, v_tab.val, w_def))
        u_tr = np.einsum("k,kaij->aij", adot_mid, tabs.surf)
        if ctx.delta_dt_plane is not None:
            gw = (ctx.delta_dt_plane[(0, 0)]
                  * (setup.geom.R + ctx.delta_plane[(0, 0)]) * ctx.w_surf)
            term += 0.5 * p.rho_f * float(np.einsum("aij,aij,ij->", u_tr, q_surf, gw))
        dteta = np.einsum("k,kij->ij", adot_mid[0::2][:setup.n_shell],
                          setup.scalar_planes)
        xi_plane = xi_out.plane_jets(setup.surf_rule.theta, setup.surf_rule.z)[(0, 0)]
        su = u_tr.copy()
        su[0] -= dteta
        sq = q_surf.copy()
        sq[0] -= xi_plane
        term += float(np.einsum("aij,aij,ij->", su, sq,
                                ctx.frame.J * ctx.w_surf)) / p.alpha
        addot_eta = np.einsum("k,kij->ij", addot_mid[0::2][:setup.n_shell],
                              setup.scalar_planes)
        term += p.rho_s_h * float(np.sum(addot_eta * xi_plane
                                         * setup.surf_rule.weights))
        eta_mid = setup.eta_field(a_mid)
        if p.shell_model == LINEAR:
            term += bending_form(eta_mid, xi_out, setup.surf_rule)
        else:
            term += koiter_form_linearized(setup.geom.R, p.elasticity, p.h_s,
                                           ctx.delta, eta_mid, xi_out,
                                           setup.surf_rule, p.metric_convention)
        term -= forcing_term(ctx, q_disks[0], q_disks[1], float(runner.P_in(t_m)),
                             float(runner.P_out(t_m)), p.inflow_normal_sign)
        out_res += dt * phi(t_m) * term
    return {"in_basis": np.abs(in_res), "out_of_basis": abs(out_res)}
