"""Cylindrical reference geometry, deformed-surface frames and the radial domain map.

All vector quantities are stored in cylindrical components (e_r, e_theta, e_z)
attached to the *reference* angle theta; the map psi(r, theta, z) =
(r + eta_tilde) e_r + z e_z preserves theta and z, so reference and deformed
frames coincide node-wise.  Derivatives of shell fields always come from the
basis (never from differencing samples); the map gradient is assembled in jet
arithmetic so that transported fields keep analytic derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContactViolation, DegenerateMap, InvalidCutoff
from .jets import Jet
from .shellbasis import ShellField

DEFAULT_MARGIN_FRACTION = 0.05


@dataclass(frozen=True)
class ReferenceGeometry:
    """Reference cylinder of radius R and length L with cutoff radii a, b."""

    R: float
    L: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.R > 0 and self.L > 0 and self.a > 0 and self.b > 0):
            raise ValueError("R, L, a, b must all be positive")
        if not self.a < self.R - self.b:
            raise ValueError("cutoff radii must satisfy a < R - b")

    @property
    def margin_default(self) -> float:
        return DEFAULT_MARGIN_FRACTION * self.R


def _smoothstep5(t):
    """C^2 quintic smoothstep on [0, 1] and its first two derivatives."""
    s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    s1 = 30.0 * t * t * (1.0 - t) ** 2
    s2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return s, s1, s2


class CutoffProfile:
    """Radial cutoff rho: 0 on (0, a), 1 on (R-b, R), C^2 quintic in between."""

    def __init__(self, geom: ReferenceGeometry):
        self.geom = geom
        self.lo = geom.a
        self.hi = geom.R - geom.b
        self.width = self.hi - self.lo
        self.max_slope = 1.875 / self.width  # sup of the quintic smoothstep derivative

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - self.lo) / self.width, 0.0, 1.0)
        return _smoothstep5(t)[0]

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - self.lo) / self.width, 0.0, 1.0)
        return _smoothstep5(t)[1] / self.width

    def d2(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - self.lo) / self.width, 0.0, 1.0)
        return _smoothstep5(t)[2] / self.width ** 2

    def check_bound(self, M: float) -> None:
        if not (M > 0) or self.max_slope >= 1.0 / M:
            raise InvalidCutoff(
                f"cutoff slope {self.max_slope:.4g} is not below 1/M = {1.0 / M:.4g}")


@dataclass(frozen=True)
class RefGrid:
    """Broadcast-ready tensor grid of reference coordinates (r-axis, theta-axis, z-axis)."""

    r: np.ndarray      # (nr, 1, 1)
    theta: np.ndarray  # (1, nth, 1)
    z: np.ndarray      # (1, 1, nz)

    @classmethod
    def from_axes(cls, r, theta, z) -> "RefGrid":
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return cls(r[:, None, None], theta[None, :, None], z[None, None, :])

    @property
    def shape(self):
        return (self.r.shape[0], self.theta.shape[1], self.z.shape[2])

    @property
    def theta_axis(self) -> int:
        return 1


def require_admissible(geom: ReferenceGeometry, eta: ShellField) -> float:
    """Enforce sup|eta| <= bound < R before any domain-dependent operation."""
    sup = eta.sup_abs()
    cap = min(eta.bound, geom.R)
    if sup > cap or sup >= geom.R:
        raise ContactViolation(
            f"sup|eta| = {sup:.6g} exceeds the admissible bound {cap:.6g} (R = {geom.R:.6g})")
    return sup


@dataclass
class SurfaceFrame:
    """Tangents, outer normal and area Jacobian of the deformed shell surface."""

    tau1: np.ndarray  # (3, nth, nz) cylindrical components
    tau2: np.ndarray
    n: np.ndarray     # unnormalized outer normal tau1 x tau2
    nu: np.ndarray    # unit outer normal
    J: np.ndarray     # area Jacobian |n|


def surface_frame(geom: ReferenceGeometry, eta: ShellField,
                  theta: np.ndarray, z: np.ndarray, plane=None) -> SurfaceFrame:
    """Frame of Gamma^eta at the tensor grid theta x z."""
    require_admissible(geom, eta)
    p = plane if plane is not None else eta.plane_jets(theta, z)
    e, e_th, e_z = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    shape = e.shape
    zero = np.zeros(shape)
    one = np.ones(shape)
    tau1 = np.stack([e_th, geom.R + e, zero])
    tau2 = np.stack([e_z, zero, one])
    n = np.stack([geom.R + e, -e_th, -e_z * (geom.R + e)])
    J = np.sqrt(np.sum(n * n, axis=0))
    return SurfaceFrame(tau1, tau2, n, n / J, J)


def jacobian(geom: ReferenceGeometry, eta: ShellField,
             theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Area Jacobian J_eta = sqrt((R+eta)^2 (1 + eta_z^2) + eta_theta^2)."""
    require_admissible(geom, eta)
    p = eta.plane_jets(theta, z)
    e, e_th, e_z = p[(0, 0)], p[(1, 0)], p[(0, 1)]
    return np.sqrt((geom.R + e) ** 2 * (1.0 + e_z ** 2) + e_th ** 2)


def contact_check(geom: ReferenceGeometry, eta: ShellField, margin: float | None = None,
                  n_theta: int = 192, n_z: int = 96):
    """True iff R + eta >= margin on a dense grid; also returns offending nodes."""
    margin = geom.margin_default if margin is None else margin
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    z = np.linspace(0.0, geom.L, n_z)
    vals = geom.R + eta.eval(th[:, None], z[None, :])
    bad = np.argwhere(vals < margin)
    offending = [(float(th[i]), float(z[j])) for i, j in bad[:32]]
    return bool(bad.size == 0), offending


def radial_extension(geom: ReferenceGeometry, rho: CutoffProfile, eta: ShellField,
                     r: np.ndarray, theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Extended displacement eta_tilde(r, theta, z) = rho(r) * eta(theta, z)."""
    if np.isfinite(eta.bound):
        rho.check_bound(eta.bound)
    vals = eta.eval(np.asarray(theta), np.asarray(z))
    return rho(np.asarray(r)) * vals


class MapJets:
    """Jet tables of the reference-to-deformed map on a RefGrid.

    Carries eta_tilde and its first partials as jets (so the map gradient has
    analytic derivatives), the stored determinant detG = (1 + d_r eta_tilde)
    * (r + eta_tilde), and the push/pull actions of the divergence-preserving
    Piola transform in cylindrical components.
    """

    def __init__(self, geom: ReferenceGeometry, rho: CutoffProfile, grid: RefGrid,
                 eta: ShellField, eta_dt: ShellField | None = None,
                 check: bool = True):
        self.geom = geom
        self.rho = rho
        self.grid = grid
        if check:
            require_admissible(geom, eta)
            if np.isfinite(eta.bound):
                rho.check_bound(eta.bound)

        th = grid.theta[0, :, 0]
        zz = grid.z[0, 0, :]
        p = eta.plane_jets(th, zz)
        pt = eta_dt.plane_jets(th, zz) if eta_dt is not None else None

        def plane(key):
            return p[key][None, :, :]

        def plane_t(key):
            return None if pt is None else pt[key][None, :, :]

        j_eta = Jet(plane((0, 0)), 0.0, plane((1, 0)), plane((0, 1)), plane_t((0, 0)))
        j_eta_th = Jet(plane((1, 0)), 0.0, plane((2, 0)), plane((1, 1)), plane_t((1, 0)))
        j_eta_z = Jet(plane((0, 1)), 0.0, plane((1, 1)), plane((0, 2)), plane_t((0, 1)))

        r = grid.r
        j_r = Jet(r.astype(float), 1.0, 0.0, 0.0, None)
        j_rho = Jet(rho(r), rho.d1(r), 0.0, 0.0, None)
        j_rhop = Jet(rho.d1(r), rho.d2(r), 0.0, 0.0, None)

        self.eta_plane = p
        self.j_r = j_r
        self.eta_t = j_rho * j_eta            # eta_tilde
        self.d_r = j_rhop * j_eta             # d_r eta_tilde
        self.d_th = j_rho * j_eta_th          # d_theta eta_tilde
        self.d_z = j_rho * j_eta_z            # d_z eta_tilde
        self.m = self.d_r + 1.0               # 1 + d_r eta_tilde
        self.psi_r = j_r + self.eta_t         # deformed radius
        self.detG = self.m * self.psi_r

        if check and np.any(self.detG.val <= 0.0):
            raise DegenerateMap("det of the map gradient is not positive everywhere")

    # -- spec-facing tables -------------------------------------------------
    def literal_matrix(self) -> np.ndarray:
        """The displayed upper-triangular map gradient in cylindrical components."""
        shape = np.broadcast_shapes(self.m.val.shape, self.psi_r.val.shape)
        G = np.zeros((3, 3) + shape)
        G[0, 0] = self.m.val
        G[0, 1] = np.broadcast_to(self.d_th.val, shape)
        G[0, 2] = np.broadcast_to(self.d_z.val, shape)
        G[1, 1] = self.psi_r.val
        G[2, 2] = 1.0
        return G

    def mapped_points(self):
        """Deformed cylindrical coordinates (r', theta, z) of the grid nodes."""
        shape = self.detG.val.shape
        return (np.broadcast_to(self.psi_r.val, shape),
                np.broadcast_to(self.grid.theta, shape),
                np.broadcast_to(self.grid.z, shape))

    def deformed_factor(self) -> np.ndarray:
        """detG / r: multiplies reference weights (which carry r) for deformed integrals."""
        return self.detG.val / self.grid.r

    # -- Piola actions -------------------------------------------------------
    def piola_push(self, q_r: Jet, q_th: Jet, q_z: Jet):
        """Divergence-preserving push of a reference field, component jets in, jets out."""
        inv = self.detG.reciprocal()
        v_r = (self.j_r * self.m * q_r + self.d_th * q_th + self.j_r * self.d_z * q_z) * inv
        v_th = self.psi_r * q_th * inv
        v_z = self.j_r * q_z * inv
        return v_r, v_th, v_z

    def piola_pull(self, v_r: Jet, v_th: Jet, v_z: Jet):
        """Inverse action: recover the reference field from a deformed one."""
        x_th = v_th / self.psi_r
        x_r = (v_r - self.d_th * x_th - self.d_z * v_z) / self.m
        q_r = self.detG * x_r / self.j_r
        q_th = self.detG * x_th
        q_z = self.detG * v_z / self.j_r
        return q_r, q_th, q_z

    # -- derived tables -------------------------------------------------------
    def deformed_gradient(self, v_r: Jet, v_th: Jet, v_z: Jet) -> np.ndarray:
        """Physical gradient tensor (dv_i/dx_j) at the deformed points, frame components."""
        m = self.m.val
        dth = self.d_th.val
        dz = self.d_z.val
        rp = self.psi_r.val

        def deformed_partials(j: Jet):
            fr = j.dr / m
            return fr, j.dth - fr * dth, j.dz - fr * dz

        r_r, r_t, r_z = deformed_partials(v_r)
        t_r, t_t, t_z = deformed_partials(v_th)
        z_r, z_t, z_z = deformed_partials(v_z)
        shape = np.broadcast_shapes(np.shape(r_r), np.shape(rp), np.shape(v_r.val))
        grad = np.zeros((3, 3) + shape)
        grad[0, 0], grad[0, 1], grad[0, 2] = r_r, (r_t - v_th.val) / rp, r_z
        grad[1, 0], grad[1, 1], grad[1, 2] = t_r, (t_t + v_r.val) / rp, t_z
        grad[2, 0], grad[2, 1], grad[2, 2] = z_r, z_t / rp, z_z
        return grad

    def eulerian_dt(self, v: tuple, grad: np.ndarray) -> np.ndarray | None:
        """Eulerian time derivative of a transported field at fixed physical points."""
        if v[0].dt is None:
            return None
        motion = self.eta_t.dt  # radial boundary-fitted velocity rho * dt(delta)
        if motion is None:
            motion = 0.0
        out = np.stack([np.broadcast_to(j.dt, grad.shape[2:]).astype(float).copy() for j in v])
        for i in range(3):
            out[i] = out[i] - grad[i, 0] * motion
        return out


def invert_radius(geom: ReferenceGeometry, rho: CutoffProfile, eta_vals: np.ndarray,
                  r_target: np.ndarray, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
    """Solve r + rho(r) * eta = r_target per node (monotone scalar Newton)."""
    r = np.clip(np.asarray(r_target, dtype=float).copy(), 0.0, geom.R)
    for _ in range(max_iter):
        f = r + rho(r) * eta_vals - r_target
        fp = 1.0 + rho.d1(r) * eta_vals
        step = f / fp
        r = np.clip(r - step, 0.0, geom.R)
        if np.max(np.abs(step)) < tol:
            break
    return r


def cyl_to_cart(vec: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Convert cylindrical components (3, ...) at angle theta to Cartesian."""
    c, s = np.cos(theta), np.sin(theta)
    vx = vec[0] * c - vec[1] * s
    vy = vec[0] * s + vec[1] * c
    return np.stack([vx, vy, vec[2]])


def cart_to_cyl(vec: np.ndarray, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    vr = vec[0] * c + vec[1] * s
    vt = -vec[0] * s + vec[1] * c
    return np.stack([vr, vt, vec[2]])
