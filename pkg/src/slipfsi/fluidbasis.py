"""Divergence-free velocity basis on the reference cylinder.

The basis comes from a Ritz discretization of the Stokes eigenproblem on the
space of H^1 divergence-free fields with zero normal trace on the lateral wall
and zero tangential trace on the end disks.  The trial pool consists of
closed-form solenoidal fields (stream functions, swirls, azimuthal potentials)
that satisfy every trace condition exactly, so each eigenmode is an analytic
field: its divergence vanishes identically and all derivatives are available
in closed form at arbitrary evaluation nodes.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly
from scipy import linalg as sla

from .errors import EigensolverFailure
from .geometry import RefGrid, ReferenceGeometry
from .jets import Jet
from .quadrature import VolumeRule

_CONST, _COS, _SIN = 0, 1, 2


def _theta_factor(kind: int, k: int, th: np.ndarray):
    if kind == _CONST:
        one = np.ones_like(th)
        return one, np.zeros_like(th)
    if kind == _COS:
        return np.cos(k * th), -k * np.sin(k * th)
    return np.sin(k * th), k * np.cos(k * th)


def _z_factor(kind: int, ell: int, L: float, z: np.ndarray):
    w = ell * np.pi / L
    if kind == _CONST:
        one = np.ones_like(z)
        return one, np.zeros_like(z)
    if kind == _COS:
        return np.cos(w * z), -w * np.sin(w * z)
    return np.sin(w * z), w * np.cos(w * z)


class SeparableTerm:
    """One separable contribution poly(r) * T(theta) * Z(z) to a vector component."""

    def __init__(self, component: int, poly, th_kind: int, k: int, z_kind: int, ell: int):
        self.component = component
        self.poly = poly
        self.dpoly = poly.deriv()
        self.th_kind = th_kind
        self.k = k
        self.z_kind = z_kind
        self.ell = ell

    def jet(self, grid: RefGrid, L: float) -> Jet:
        P, P1 = self.poly(grid.r), self.dpoly(grid.r)
        T, T1 = _theta_factor(self.th_kind, self.k, grid.theta)
        Z, Z1 = _z_factor(self.z_kind, self.ell, L, grid.z)
        return Jet(P * T * Z, P1 * T * Z, P * T1 * Z, P * T * Z1, 0.0)


class PoolField:
    """Closed-form solenoidal field given by separable terms per component."""

    def __init__(self, label: str, terms):
        self.label = label
        self.terms = terms

    def jets(self, grid: RefGrid, L: float):
        shape = grid.shape
        comps = [Jet(np.zeros(shape), np.zeros(shape), np.zeros(shape),
                     np.zeros(shape), 0.0) for _ in range(3)]
        for term in self.terms:
            comps[term.component] = comps[term.component] + term.jet(grid, L)
        return tuple(comps)


def _radial_Q(i: int, R: float):
    """Shifted Legendre polynomial in (r/R)^2: smooth and even in r."""
    leg = npleg.Legendre.basis(i, domain=[0.0, R * R]).convert(kind=nppoly.Polynomial)
    return leg(nppoly.Polynomial([0.0, 0.0, 1.0]))  # compose with r^2


def build_pool(geom: ReferenceGeometry, size_hint: int):
    """Deterministic pool of analytic divergence-free fields meeting the trace conditions."""
    R, L = geom.R, geom.L
    scale = 1.0 / R
    fields: list[PoolField] = []
    r2 = nppoly.Polynomial([0.0, 0.0, 1.0])
    rr = nppoly.Polynomial([0.0, 1.0])
    wall = nppoly.Polynomial([R * R]) - r2  # R^2 - r^2

    deg_cap, k_cap, l_cap = 2, 2, 2
    while True:
        fields.clear()
        # through-flow: v = Q(r^2) e_z
        for i in range(deg_cap + 1):
            fields.append(PoolField(f"P{i}", [
                SeparableTerm(2, _radial_Q(i, R), _CONST, 0, _CONST, 0)]))
        # axisymmetric meridional: psi = r^2 (R^2 - r^2) Q cos(l pi z / L),
        # v_r = -(1/r) dz(psi), v_z = (1/r) dr(psi)
        for i in range(deg_cap):
            for ell in range(1, l_cap + 1):
                w = ell * np.pi / L
                f = r2 * wall * _radial_Q(i, R) * scale ** 3
                f_over_r = f // rr
                fp_over_r = f.deriv() // rr
                fields.append(PoolField(f"M{i}l{ell}", [
                    SeparableTerm(0, f_over_r * w, _CONST, 0, _SIN, ell),
                    SeparableTerm(2, fp_over_r, _CONST, 0, _COS, ell),
                ]))
        # axisymmetric swirl: v_theta = r Q sin(l pi z / L)
        for i in range(deg_cap):
            for ell in range(1, l_cap + 1):
                fields.append(PoolField(f"S{i}l{ell}", [
                    SeparableTerm(1, rr * _radial_Q(i, R) * scale, _CONST, 0, _SIN, ell)]))
        # planar modes from chi = c(r) T_k(theta) sin(l pi z / L), c = r^k (R^2-r^2) Q:
        # v_r = (1/r) dtheta(chi), v_theta = -dr(chi)
        for k in range(1, k_cap + 1):
            rk = rr ** k
            for trig in (_COS, _SIN):
                dkind = _SIN if trig == _COS else _COS
                dfac = -float(k) if trig == _COS else float(k)
                for i in range(deg_cap):
                    for ell in range(1, l_cap + 1):
                        c = rk * wall * _radial_Q(i, R) * scale ** (k + 2)
                        fields.append(PoolField(f"T{k}t{trig}q{i}l{ell}", [
                            SeparableTerm(0, (c // rr) * dfac, dkind, k, _SIN, ell),
                            SeparableTerm(1, -c.deriv(), trig, k, _SIN, ell),
                        ]))
        # azimuthal-potential modes from phi = c(r) T_k(theta) cos(l pi z / L):
        # v_theta = r dz(phi), v_z = -dtheta(phi)
        for k in range(1, k_cap + 1):
            rk = rr ** k
            for trig in (_COS, _SIN):
                dkind = _SIN if trig == _COS else _COS
                dfac = -float(k) if trig == _COS else float(k)
                for i in range(deg_cap):
                    for ell in range(0, l_cap):
                        c = rk * _radial_Q(i, R) * scale ** k
                        terms = [SeparableTerm(2, c * (-dfac), dkind, k, _COS, ell)]
                        if ell > 0:
                            terms.append(SeparableTerm(1, rr * c * (-ell * np.pi / L),
                                                       trig, k, _SIN, ell))
                        fields.append(PoolField(f"W{k}t{trig}q{i}l{ell}", terms))
        if len(fields) >= max(2 * size_hint, 24) or deg_cap >= 5:
            break
        deg_cap += 1
        k_cap += 1
        l_cap += 1
    return fields


def frame_gradient(jets, radius) -> np.ndarray:
    """Cylindrical-frame gradient (dv_i/dx_j) from coordinate jets at radius > 0."""
    v_r, v_th, v_z = jets
    shape = np.broadcast_shapes(np.shape(v_r.val), np.shape(radius))
    g = np.zeros((3, 3) + shape)
    g[0, 0], g[0, 1], g[0, 2] = v_r.dr, (v_r.dth - v_th.val) / radius, v_r.dz
    g[1, 0], g[1, 1], g[1, 2] = v_th.dr, (v_th.dth + v_r.val) / radius, v_th.dz
    g[2, 0], g[2, 1], g[2, 2] = v_z.dr, v_z.dth / radius, v_z.dz
    return g


def cylindrical_divergence(jets, radius) -> np.ndarray:
    v_r, v_th, v_z = jets
    return v_r.dr + v_r.val / radius + v_th.dth / radius + v_z.dz


class FluidReferenceBasis:
    """L2-orthonormal Stokes-Ritz eigenmodes spanned by the analytic pool."""

    def __init__(self, geom: ReferenceGeometry, m: int, rule: VolumeRule):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.geom = geom
        self.m = m
        pool = build_pool(geom, m)
        self.pool = pool
        grid = RefGrid.from_axes(rule.r, rule.theta, rule.z)
        w = rule.weights

        vals = []
        grads = []
        for f in pool:
            jets = f.jets(grid, geom.L)
            vals.append(np.stack([np.broadcast_to(j.val, grid.shape) for j in jets]))
            grads.append(frame_gradient(jets, grid.r))
        V = np.stack(vals)                    # (npool, 3, nr, nth, nz)
        Gr = np.stack(grads)                  # (npool, 3, 3, nr, nth, nz)
        mass = np.einsum("pcijk,qcijk,ijk->pq", V, V, w)
        stiff = np.einsum("pcdijk,qcdijk,ijk->pq", Gr, Gr, w)
        mass = 0.5 * (mass + mass.T)
        stiff = 0.5 * (stiff + stiff.T)

        # prune near-dependent pool directions before the generalized eigensolve
        ew, evec = np.linalg.eigh(mass)
        keep = ew > 1e-10 * ew.max()
        if keep.sum() < m:
            raise EigensolverFailure(
                f"pool rank {int(keep.sum())} is below the requested mode count {m}")
        B = evec[:, keep] / np.sqrt(ew[keep])
        try:
            lam, U = sla.eigh(B.T @ stiff @ B, overwrite_a=True)
        except sla.LinAlgError as exc:  # pragma: no cover - defensive
            raise EigensolverFailure(str(exc)) from exc
        if not np.all(np.isfinite(lam)):
            raise EigensolverFailure("Stokes eigensolve returned non-finite eigenvalues")
        coeff = (B @ U[:, :m]).T              # (m, npool), L2-orthonormal by construction
        self.eigenvalues = lam[:m]
        self.coefficients = coeff

    def mode_jets(self, grid: RefGrid, k: int | None = None):
        """Component jets of mode k (or all modes stacked on a leading axis)."""
        shape = grid.shape
        pool_jets = [f.jets(grid, self.geom.L) for f in self.pool]
        which = range(self.m) if k is None else [k]
        out = []
        for idx in which:
            comps = []
            for c in range(3):
                val = np.zeros(shape)
                dr = np.zeros(shape)
                dth = np.zeros(shape)
                dz = np.zeros(shape)
                for w_, jets in zip(self.coefficients[idx], pool_jets):
                    j = jets[c]
                    val += w_ * np.broadcast_to(j.val, shape)
                    dr += w_ * np.broadcast_to(j.dr, shape)
                    dth += w_ * np.broadcast_to(j.dth, shape)
                    dz += w_ * np.broadcast_to(j.dz, shape)
                comps.append(Jet(val, dr, dth, dz, 0.0))
            out.append(tuple(comps))
        return out[0] if k is not None else out
