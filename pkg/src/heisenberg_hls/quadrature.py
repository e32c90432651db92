"""Singular-kernel quadrature for the fractional integral on H^1.

For cylindrically symmetric f the 3D integral

    I_lam(f)(u) = int f(v) |u^-1 v|^(-lam) dv

reduces to a 2D integral in (rho', t') against the angular average

    Kbar(rho, rho', tau) = (1/2pi) int_0^2pi
        [ (rho^2 + rho'^2 - 2 rho rho' cos phi)^2
          + (tau - 2 rho rho' sin phi)^2 ]^(-lam/4) dphi,

tau = t' - t.  Kbar is evaluated with the periodic trapezoid rule, nested
node doubling until a relative tolerance is met; the rule is spectrally
accurate away from the near-singular locus rho ~ rho', tau ~ 0 and the
doubling resolves the angular peak near it.

Discretization is product integration: the operator is a tensor
A[i, i', k] (k indexes tau = t'-t on its lattice) so that

    (I_lam f)[i, j] = sum_{i', j'} A[i, i', j'-j+offset] f[i', j'].

Far from the singular locus the entries are nodal kernel values times
cell measure, a composite rule whose midpoint-style errors telescope.
Inside a connected zone around the locus (where the kernel's tau ridge is
narrower than the grid spacing) every cell is integrated exactly: the
diagonal band by adaptive 2x2 subdivision with Gauss-Legendre cells, the
off-diagonal ridge cells by a Gauss rule in rho' with a sinh-graded tau
rule centered on the ridge, and the cell containing the evaluation point
itself by a local polar rule whose radial substitution r = R s^(1/(Q-lam))
integrates the leading singular behaviour r^(Q-1-lam) exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HlsParams
from .grids import CylGridFunction, GridSpec, lp_norm, rho_cell_edges
from .group import GroupPoint, distance, homogeneous_dimension

_TWO_PI = 2.0 * math.pi

# angular quadrature controls
KBAR_M0 = 64
KBAR_RTOL = 1e-9
KBAR_MCAP = 512  # beyond this the graded peak rule takes over
KBAR_NXI = 192
_CHUNK = 1 << 22  # max elements per (entries x phi-nodes) work array

# cell refinement controls
RATIO_TOL = 2.0
DEPTH_MAX = 6
N_THETA = 14
N_S = 20


def riesz_kernel(u: GroupPoint, v: GroupPoint, lam: float) -> float:
    """Kernel |u^-1 v|^(-lam); returns +inf at u = v (signaled, not raised)."""
    Q = homogeneous_dimension(u.n)
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    d = distance(u, v)
    if d == 0.0:
        return math.inf
    return d ** (-lam)


def _kbar_mean(rho, rho2, tau, lam, phis):
    """Mean over the given phi nodes of the reduced kernel integrand.

    P is evaluated as (rho-rho')^2 + 4 rho rho' sin^2(phi/2), which is exact
    for small phi where the textbook form cancels catastrophically.
    """
    sh = np.sin(0.5 * phis)
    s = np.sin(phis)
    rr = (rho * rho2)[:, None]
    P = ((rho - rho2) ** 2)[:, None] + 4.0 * rr * (sh * sh)[None, :]
    V = tau[:, None] - 2.0 * rr * s[None, :]
    F = (P * P + V * V) ** (-0.25 * lam)
    return F.mean(axis=1)


def _kbar_graded(rho, rho2, tau, lam, n_xi=KBAR_NXI):
    """Angular average by a peak-resolving substitution.

    The integrand peaks at phi* with sin(phi*) = tau/(2 rho rho'), where the
    vertical term vanishes; the peak width scales like P0/(2 rho rho').
    Writing phi = phi* + w sinh(xi) and integrating xi over one full period
    with Gauss-Legendre clusters nodes geometrically into the peak, so a
    fixed node count resolves arbitrarily narrow near-singular peaks.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    rho2 = np.asarray(rho2, dtype=float).ravel()
    tau = np.asarray(tau, dtype=float).ravel()
    rr = rho * rho2
    with np.errstate(divide="ignore", invalid="ignore"):
        s_arg = np.where(rr > 0.0, tau / (2.0 * rr), 0.0)
    s_arg = np.clip(s_arg, -1.0, 1.0)
    phi_star = np.arcsin(s_arg)
    P0 = rho * rho + rho2 * rho2 - 2.0 * rr * np.cos(phi_star)
    denom = 2.0 * rr * np.abs(np.cos(phi_star)) + np.abs(tau) + P0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(denom > 0.0, P0 / denom, 1.0)
    w = np.clip(w, 1e-280, 1.0)
    Xi = np.arcsinh(math.pi / w)

    # very deep peaks span many log-decades; give them more nodes
    deep = Xi > 20.0
    if deep.any() and not deep.all():
        out = np.empty(rho.size)
        out[~deep] = _kbar_graded(rho[~deep], rho2[~deep], tau[~deep], lam, n_xi)
        out[deep] = _kbar_graded(rho[deep], rho2[deep], tau[deep], lam, 4 * n_xi)
        return out
    if deep.all() and n_xi < 4 * KBAR_NXI:
        n_xi = 4 * KBAR_NXI

    half = max(8, n_xi // 2)
    gl_x, gl_w = np.polynomial.legendre.leggauss(half)
    # two panels [-Xi, 0] and [0, Xi] so the peak kink sits at endpoints
    nodes = np.concatenate([-0.5 * (gl_x + 1.0)[::-1], 0.5 * (gl_x + 1.0)])
    wts = np.concatenate([0.5 * gl_w[::-1], 0.5 * gl_w])
    out = np.empty(rho.size)
    step = max(1, _CHUNK // (2 * half))
    # delta form around the peak: with phi = phi* + d,
    #   V = V0 + 4 rr sin(phi*) sin^2(d/2) - 2 rr cos(phi*) sin(d)
    #   P = (rho-rho')^2 + 4 rr sin^2(phi/2)
    # which keeps full precision when d is many orders below phi*.
    V0 = tau - 2.0 * rr * np.sin(phi_star)
    for a in range(0, rho.size, step):
        b = min(rho.size, a + step)
        xi = Xi[a:b, None] * nodes[None, :]
        d = w[a:b, None] * np.sinh(xi)
        dphi_w = w[a:b, None] * np.cosh(xi) * (Xi[a:b, None] * wts[None, :])
        rrl = rr[a:b, None]
        ps = phi_star[a:b, None]
        sh = np.sin(0.5 * (ps + d))
        P = ((rho[a:b] - rho2[a:b]) ** 2)[:, None] + 4.0 * rrl * sh * sh
        shd = np.sin(0.5 * d)
        V = (
            V0[a:b, None]
            + 4.0 * rrl * np.sin(ps) * shd * shd
            - 2.0 * rrl * np.cos(ps) * np.sin(d)
        )
        F = (P * P + V * V) ** (-0.25 * lam)
        out[a:b] = np.einsum("ij,ij->i", F, dphi_w) / _TWO_PI
    return out


def kbar_many(rho, rho2, tau, lam, m0=KBAR_M0, rtol=KBAR_RTOL, m_cap=KBAR_MCAP):
    """Angular-averaged kernel for flat arrays of (rho, rho', tau).

    Nested doubling of the periodic trapezoid rule per entry until the
    relative change drops below rtol; entries still unconverged at m_cap
    nodes (near-singular peaks) are finished with the graded peak rule.
    Exactly singular entries (rho == rho' and tau == 0) come out as +inf.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    rho2 = np.asarray(rho2, dtype=float).ravel()
    tau = np.asarray(tau, dtype=float).ravel()
    rho, rho2, tau = np.broadcast_arrays(rho, rho2, tau)
    rho, rho2, tau = rho.copy(), rho2.copy(), tau.copy()
    M = rho.size
    m = max(4, int(m0))
    phis = _TWO_PI * np.arange(m) / m
    est = _chunked_mean(rho, rho2, tau, lam, phis)
    active = np.isfinite(est)
    while m < m_cap and active.any():
        mid = _TWO_PI * (np.arange(m) + 0.5) / m
        sub = np.flatnonzero(active)
        mid_mean = _chunked_mean(rho[sub], rho2[sub], tau[sub], lam, mid)
        new = 0.5 * (est[sub] + mid_mean)
        done = np.abs(new - est[sub]) <= rtol * np.abs(new)
        est[sub] = new
        active[sub[done]] = False
        m *= 2
    hard = np.flatnonzero(active)
    if hard.size:
        est[hard] = _kbar_graded(rho[hard], rho2[hard], tau[hard], lam)
    return est


def _chunked_mean(rho, rho2, tau, lam, phis):
    m = phis.size
    n = rho.size
    out = np.empty(n)
    step = max(1, _CHUNK // max(m, 1))
    for a in range(0, n, step):
        b = min(n, a + step)
        out[a:b] = _kbar_mean(rho[a:b], rho2[a:b], tau[a:b], lam, phis)
    return out


def angular_average_kernel(rho: float, rho2: float, tau: float, lam: float, m: int = KBAR_M0) -> float:
    """Angular average of the kernel over the phi circle (n = 1 reduction).

    m is the starting node count of the periodic trapezoid rule; refinement
    proceeds by node doubling.  The exact singular point rho = rho', tau = 0
    returns +inf.
    """
    if not (0.0 < lam < 4.0):
        raise ValueError(f"lambda must lie in (0, 4) for n = 1, got {lam}")
    if rho < 0.0 or rho2 < 0.0:
        raise ValueError("radii must be nonnegative")
    if (rho - rho2) ** 2 + tau * tau == 0.0 and rho * rho2 > 0.0:
        return math.inf
    if rho == 0.0 and rho2 == 0.0 and tau == 0.0:
        return math.inf
    return float(kbar_many([rho], [rho2], [tau], lam, m0=max(4, int(m)))[0])


# ---------------------------------------------------------------------------
# cell integration helpers


def _leggauss01(k):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (x + 1.0), 0.5 * w


def _center_cell_integral(lam, rho0, ra, rb, ta, tb, t_eval):
    """Integral of 2 pi rho' Kbar(rho0, rho', t'-t_eval) over the cell
    [ra, rb] x [ta, tb] that contains the singular point (rho0, t_eval).

    The kernel is approximately radial in the scaled local coordinates
    x = rho' - rho0, y = (t' - t_eval)/(2 rho0) only within a distance
    of order rho0 from the singularity, so the polar rule is applied on a
    small core rectangle around the point and the remainder of the cell is
    handed to the adaptive subdivision integrator.
    """
    # core half-widths, capped at the validity scale of the local expansion
    hx_lo = min(rho0 - ra, 0.3 * rho0)
    hx_hi = min(rb - rho0, 0.3 * rho0)
    hy_lo = min(t_eval - ta, 0.6 * rho0 * rho0)
    hy_hi = min(tb - t_eval, 0.6 * rho0 * rho0)
    core = (rho0 - hx_lo, rho0 + hx_hi, t_eval - hy_lo, t_eval + hy_hi)
    rest = []
    if core[0] > ra:
        rest.append((ra, core[0], ta, tb))
    if core[1] < rb:
        rest.append((core[1], rb, ta, tb))
    if core[2] > ta:
        rest.append((core[0], core[1], ta, core[2]))
    if core[3] < tb:
        rest.append((core[0], core[1], core[3], tb))
    total = float(_refine_cells(lam, rho0, rest, t_eval, depth_max=DEPTH_MAX + 2).sum())
    return total + _polar_core_integral(lam, rho0, *core, t_eval)


def _polar_core_integral(lam, rho0, ra, rb, ta, tb, t_eval):
    """Polar rule with exponent-matched radial substitution on a core
    rectangle containing (rho0, t_eval): corner decomposition in the scaled
    coordinates, r = R(theta) s^(1/(Q-lam))."""
    nu = 4.0 - lam
    sy = 2.0 * rho0
    xa, xb = ra - rho0, rb - rho0
    ya, yb = (ta - t_eval) / sy, (tb - t_eval) / sy
    sgl_s, sgl_w = _leggauss01(N_S)
    th_s, th_w = _leggauss01(N_THETA)

    rho_list, tau_list, wgt_list = [], [], []
    for sx_sign, X in ((1.0, xb), (-1.0, -xa)):
        for sy_sign, Y in ((1.0, yb), (-1.0, -ya)):
            if X <= 0.0 or Y <= 0.0:
                continue
            theta_d = math.atan2(Y, X)
            for t_lo, t_hi, r_of_theta in (
                (0.0, theta_d, lambda th: X / np.cos(th)),
                (theta_d, 0.5 * math.pi, lambda th: Y / np.sin(th)),
            ):
                width = t_hi - t_lo
                if width <= 0.0:
                    continue
                thetas = t_lo + width * th_s
                R = r_of_theta(thetas)
                # nodes: (theta, s) grid
                r = R[:, None] * sgl_s[None, :] ** (1.0 / nu)
                x = sx_sign * r * np.cos(thetas)[:, None]
                y = sy_sign * r * np.sin(thetas)[:, None]
                rho_p = rho0 + x
                s_jac = (R ** 2 / nu)[:, None] * sgl_s[None, :] ** (2.0 / nu - 1.0)
                full_w = (
                    (th_w * width)[:, None]
                    * sgl_w[None, :]
                    * s_jac
                    * (_TWO_PI * rho_p * sy)
                )
                rho_list.append(rho_p.ravel())
                tau_list.append((sy * y).ravel())
                wgt_list.append(full_w.ravel())
    if not rho_list:
        return 0.0
    rho_p = np.concatenate(rho_list)
    tau = np.concatenate(tau_list)
    wgt = np.concatenate(wgt_list)
    kb = kbar_many(np.full(rho_p.size, rho0), rho_p, tau, lam, rtol=1e-7)
    return float(np.dot(wgt, kb))


_GLC_N = 4


def _gl_cell_values(lam, rho0, rects, t_eval):
    """Tensor Gauss-Legendre integral of 2 pi rho' Kbar over each rectangle."""
    gx, gw = _leggauss01(_GLC_N)
    ra, rb, ta, tb = rects.T
    rp = ra[:, None] + (rb - ra)[:, None] * gx[None, :]
    tp = ta[:, None] + (tb - ta)[:, None] * gx[None, :]
    # node mesh (cell, ir, it)
    R = np.repeat(rp[:, :, None], _GLC_N, axis=2)
    T = np.repeat(tp[:, None, :], _GLC_N, axis=1)
    kb = kbar_many(
        np.repeat(rho0, R.size), R.ravel(), T.ravel() - t_eval, lam, rtol=1e-7
    ).reshape(R.shape)
    w2 = gw[:, None] * gw[None, :]
    area = (rb - ra) * (tb - ta)
    return area * np.einsum("cij,ij,cij->c", kb, w2, _TWO_PI * R)


def _refine_cells(lam, rho0, rects, t_eval, depth_max=DEPTH_MAX, ratio_tol=RATIO_TOL):
    """Adaptive 2x2 subdivision of cells [ra, rb] x [ta, tb] (absolute t').

    Returns the integral of 2 pi rho' Kbar(rho0, rho', t'-t_eval) per input
    cell.  A rectangle is accepted when its corner/center kernel ratio is
    below ratio_tol, then integrated with a tensor Gauss-Legendre rule;
    otherwise it is split into four.
    """
    n_in = len(rects)
    totals = np.zeros(n_in)
    if n_in == 0:
        return totals
    rects = np.asarray(rects, dtype=float)
    owner = np.arange(n_in)
    depth = 0
    while rects.size:
        ra, rb, ta, tb = rects.T
        rm = 0.5 * (ra + rb)
        tm = 0.5 * (ta + tb)
        # corner + center kernel values per rectangle
        rr = np.stack([ra, ra, rb, rb, rm], axis=1)
        tt = np.stack([ta, tb, ta, tb, tm], axis=1)
        kb = kbar_many(
            np.repeat(rho0, rr.size), rr.ravel(), tt.ravel() - t_eval, lam, rtol=1e-7
        ).reshape(rr.shape)
        kmax = kb.max(axis=1)
        kmin = kb.min(axis=1)
        with np.errstate(invalid="ignore"):
            flat = (kmax <= ratio_tol * kmin) | (depth >= depth_max)
        flat |= ~np.isfinite(kmax) & (depth >= depth_max)
        done = np.flatnonzero(flat)
        if done.size:
            np.add.at(totals, owner[done], _gl_cell_values(lam, rho0, rects[done], t_eval))
        todo = np.flatnonzero(~flat)
        if todo.size == 0:
            break
        ra, rb, ta, tb = rects[todo].T
        rm = 0.5 * (ra + rb)
        tm = 0.5 * (ta + tb)
        children = np.concatenate(
            [
                np.stack([ra, rm, ta, tm], axis=1),
                np.stack([rm, rb, ta, tm], axis=1),
                np.stack([ra, rm, tm, tb], axis=1),
                np.stack([rm, rb, tm, tb], axis=1),
            ]
        )
        rects = children
        owner = np.concatenate([owner[todo]] * 4)
        depth += 1
    return totals


# ---------------------------------------------------------------------------
# kernel table on the tau lattice


@dataclass
class KernelTable:
    """Product-integration tensor for (I_lam f) on a fixed grid, n = 1.

    A[i, i', k] is the quadrature weight of node (i', j') in the evaluation
    of I_lam f at node (i, j), with k = j' - j + (n_t - 1).
    """

    spec: GridSpec
    lam: float
    A: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        n_t = self.spec.n_t
        out = np.empty((self.spec.n_rho, n_t))
        for i in range(self.spec.n_rho):
            win = np.lib.stride_tricks.sliding_window_view(self.A[i], n_t, axis=-1)
            # win[i', s, j'] = A[i, i', s + j'];  out[i, j] = tmp[n_t-1-j]
            tmp = np.einsum("bsk,bk->s", win, values)
            out[i] = tmp[::-1]
        return out


def _build_kbar_lattice(rho, tau, lam):
    """Nodal Kbar[i, i', k] on the tau lattice, exploiting the symmetries
    Kbar(rho, rho', tau) = Kbar(rho', rho, tau) = Kbar(rho, rho', -tau)."""
    nr = rho.size
    L = tau.size
    mid = (L - 1) // 2
    tau_half = tau[mid:]
    K = np.empty((nr, nr, L))
    iu, ju = np.triu_indices(nr)
    # exact singular entries are replaced by the center-cell rule later
    flat_rho = np.repeat(rho[iu], tau_half.size)
    flat_rho2 = np.repeat(rho[ju], tau_half.size)
    flat_tau = np.tile(tau_half, iu.size)
    exact = (flat_rho == flat_rho2) & (flat_tau == 0.0)
    vals = np.empty(flat_rho.size)
    vals[exact] = 0.0
    idx = np.flatnonzero(~exact)
    vals[idx] = kbar_many(flat_rho[idx], flat_rho2[idx], flat_tau[idx], lam)
    vals = vals.reshape(iu.size, tau_half.size)
    K[iu, ju, mid:] = vals
    K[ju, iu, mid:] = vals
    K[:, :, :mid] = K[:, :, mid + 1 :][:, :, ::-1]
    return K


def _exact_zone_mask(rho0, rho, drho, tau, dt):
    """Cells integrated exactly instead of nodally, per evaluation radius.

    The kernel is peaked along the ridge tau = 0 with width of order
    2 rho_bar |delta| (rho_bar = sqrt(rho0 rho') is the anisotropic
    scaling radius).  Nodal sampling puts a node exactly on the ridge, so
    every cell whose ridge width falls below a few grid spacings must be
    integrated exactly; no mass-based exemption applies, because the ridge
    peak value grows exactly as fast as the cell measure shrinks.  The
    zone is a simply connected neighbourhood of the ridge: outside it the
    composite nodal rule keeps its Euler-Maclaurin telescoping, which
    scattered per-cell corrections would destroy.
    """
    delta = np.abs(rho - rho0)
    rho_bar = np.sqrt(rho0 * rho)
    width = 2.0 * rho_bar * delta
    in_delta = (width <= 3.0 * dt) | (delta <= 3.0 * drho)
    tau_win = 3.0 * np.maximum(dt, width)
    return in_delta[:, None] & (np.abs(tau)[None, :] <= tau_win[:, None])


def _ridge_band_mask(rho0, rho, drho):
    """Within the exact zone: cells handled by adaptive subdivision (the
    diagonal band, where the kernel is singular in rho' across the cell)
    versus the ridge integrator (smooth in rho', peaked in tau)."""
    return np.abs(rho - rho0) > 3.0 * drho


_RIDGE_NRHO = 6
_RIDGE_NTAU = 32


def _ridge_cell_values(lam, rho0, rects, t_eval):
    """Integral of 2 pi rho' Kbar over cells crossed by the tau ridge.

    Gauss-Legendre in rho'; in tau the substitution tau = w sinh(xi)
    centered on the ridge clusters nodes into the peak, whose width w is
    known from the anisotropic scaling.  Valid when the kernel is smooth
    in rho' across the cell (off the diagonal band).
    """
    rects = np.asarray(rects, dtype=float)
    if rects.size == 0:
        return np.zeros(0)
    gx, gw = _leggauss01(_RIDGE_NRHO)
    hx, hw = np.polynomial.legendre.leggauss(_RIDGE_NTAU)
    ra, rb, ta, tb = rects.T
    rp = ra[:, None] + (rb - ra)[:, None] * gx[None, :]  # (c, ir)
    w = np.maximum(2.0 * np.sqrt(rho0 * rp) * np.abs(rp - rho0), 1e-10)
    xi_a = np.arcsinh((ta[:, None] - t_eval) / w)
    xi_b = np.arcsinh((tb[:, None] - t_eval) / w)
    half = 0.5 * (xi_b - xi_a)
    mid = 0.5 * (xi_b + xi_a)
    xi = mid[:, :, None] + half[:, :, None] * hx[None, None, :]  # (c, ir, it)
    tau = t_eval + w[:, :, None] * np.sinh(xi)
    dtau = w[:, :, None] * np.cosh(xi) * (half[:, :, None] * hw[None, None, :])
    R3 = np.broadcast_to(rp[:, :, None], tau.shape)
    kb = kbar_many(
        np.full(tau.size, rho0), R3.ravel(), (tau - t_eval).ravel(), lam, rtol=1e-8
    ).reshape(tau.shape)
    inner = np.einsum("cit,cit->ci", kb, dtau)
    return np.einsum("ci,i,ci->c", inner, gw, _TWO_PI * rp) * (rb - ra)


def build_kernel_table(spec: GridSpec, lam: float) -> KernelTable:
    if spec.n != 1:
        raise ValueError("deterministic quadrature path supports n = 1 only")
    Q = homogeneous_dimension(spec.n)
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    rho = spec.rho_nodes()
    edges = rho_cell_edges(rho)
    drho = np.diff(edges)
    dt = spec.dt
    n_t = spec.n_t
    L = 2 * n_t - 1
    mid = n_t - 1
    tau = (np.arange(L) - mid) * dt
    tau_edges = np.concatenate([tau - 0.5 * dt, [tau[-1] + 0.5 * dt]])

    K = _build_kbar_lattice(rho, tau, lam)
    A = K * (_TWO_PI * rho * drho)[None, :, None] * dt

    for i in range(rho.size):
        zone = _exact_zone_mask(rho[i], rho, drho, tau, dt)
        zone[i, mid] = False  # center cell gets the polar rule
        ridge = _ridge_band_mask(rho[i], rho, drho)
        sel_band = np.argwhere(zone & ~ridge[:, None])
        sel_ridge = np.argwhere(zone & ridge[:, None])
        if sel_band.size:
            rects = [
                (edges[a], edges[a + 1], tau_edges[k], tau_edges[k + 1])
                for a, k in sel_band
            ]
            A[i, sel_band[:, 0], sel_band[:, 1]] = _refine_cells(
                lam, rho[i], rects, t_eval=0.0
            )
        if sel_ridge.size:
            rects = [
                (edges[a], edges[a + 1], tau_edges[k], tau_edges[k + 1])
                for a, k in sel_ridge
            ]
            A[i, sel_ridge[:, 0], sel_ridge[:, 1]] = _ridge_cell_values(
                lam, rho[i], rects, t_eval=0.0
            )
        A[i, i, mid] = _center_cell_integral(
            lam, rho[i], edges[i], edges[i + 1], tau_edges[mid], tau_edges[mid + 1], 0.0
        )
    return KernelTable(spec=spec, lam=lam, A=A)


_TABLE_CACHE: dict = {}


def kernel_table(spec: GridSpec, lam: float) -> KernelTable:
    key = (spec, float(lam))
    if key not in _TABLE_CACHE:
        if len(_TABLE_CACHE) >= 8:
            _TABLE_CACHE.pop(next(iter(_TABLE_CACHE)))
        _TABLE_CACHE[key] = build_kernel_table(spec, lam)
    return _TABLE_CACHE[key]


def clear_table_cache():
    _TABLE_CACHE.clear()


def _check_uniform_t(t: np.ndarray):
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-10, atol=0.0):
        raise ValueError("the deterministic operator requires a uniform t grid")


def _table_for(f: CylGridFunction, lam: float) -> KernelTable:
    if f.spec is not None:
        return kernel_table(f.spec, lam)
    _check_uniform_t(f.t_nodes)
    spec = GridSpec(
        n=f.n,
        n_rho=f.rho_nodes.size,
        rho_min=float(f.rho_nodes[0]),
        rho_max=float(f.rho_nodes[-1]),
        n_t=f.t_nodes.size,
        t_max=float(f.t_nodes[-1]),
    )
    return build_kernel_table(spec, lam)


# ---------------------------------------------------------------------------
# public operations


def fractional_integral_grid(f: CylGridFunction, lam: float) -> CylGridFunction:
    """I_lam f sampled on f's own grid (deterministic path, n = 1)."""
    if f.n != 1:
        raise ValueError("deterministic path requires n = 1; use the Monte Carlo path")
    table = _table_for(f, lam)
    return f.with_values(table.apply(f.values))


def weights_row(f: CylGridFunction, lam: float, rho0: float, t0: float) -> np.ndarray:
    """Quadrature weights R[i', j'] so that I_lam f(rho0, t0) = sum R * values."""
    Q = homogeneous_dimension(f.n)
    if not (0.0 < lam < Q):
        raise ValueError(f"lambda must lie in (0, Q) = (0, {Q}), got {lam}")
    if f.n != 1:
        raise ValueError("deterministic path requires n = 1; use the Monte Carlo path")
    rho = f.rho_nodes
    t = f.t_nodes
    _check_uniform_t(t)
    edges = rho_cell_edges(rho)
    drho = np.diff(edges)
    dt = float(t[1] - t[0])
    tau = t - t0
    tau_edges = np.concatenate([tau - 0.5 * dt, [tau[-1] + 0.5 * dt]])

    flat_rho2 = np.repeat(rho, t.size)
    flat_tau = np.tile(tau, rho.size)
    exact = (flat_rho2 == rho0) & (flat_tau == 0.0)
    K = np.empty(flat_rho2.size)
    K[exact] = 0.0
    idx = np.flatnonzero(~exact)
    K[idx] = kbar_many(np.full(idx.size, rho0), flat_rho2[idx], flat_tau[idx], lam)
    K = K.reshape(rho.size, t.size)
    R = K * (_TWO_PI * rho * drho)[:, None] * dt

    zone = _exact_zone_mask(rho0, rho, drho, tau, dt)
    # cells containing the singular point get the polar rule
    contains_r = (edges[:-1] <= rho0) & (rho0 <= edges[1:])
    contains_t = (tau_edges[:-1] <= 0.0) & (0.0 <= tau_edges[1:])
    center_cells = np.argwhere(contains_r[:, None] & contains_t[None, :])
    for a, k in center_cells:
        zone[a, k] = False
        R[a, k] = _center_cell_integral(
            lam, rho0, edges[a], edges[a + 1], t[k] - 0.5 * dt, t[k] + 0.5 * dt, t0
        )
    ridge = _ridge_band_mask(rho0, rho, drho)
    sel_band = np.argwhere(zone & ~ridge[:, None])
    sel_ridge = np.argwhere(zone & ridge[:, None])
    if sel_band.size:
        rects = [
            (edges[a], edges[a + 1], t[k] - 0.5 * dt, t[k] + 0.5 * dt)
            for a, k in sel_band
        ]
        R[sel_band[:, 0], sel_band[:, 1]] = _refine_cells(lam, rho0, rects, t_eval=t0)
    if sel_ridge.size:
        rects = [
            (edges[a], edges[a + 1], t[k] - 0.5 * dt, t[k] + 0.5 * dt)
            for a, k in sel_ridge
        ]
        R[sel_ridge[:, 0], sel_ridge[:, 1]] = _ridge_cell_values(
            lam, rho0, rects, t_eval=t0
        )
    return R


def fractional_integral(f: CylGridFunction, lam: float, u: GroupPoint) -> float:
    """I_lam(f)(u) by product-integration quadrature over f's grid."""
    if u.n != f.n:
        raise ValueError(f"dimension mismatch: grid n={f.n}, point n={u.n}")
    rho0 = float(np.sqrt(np.dot(u.z, u.z)))
    R = weights_row(f, lam, rho0, u.t)
    return float(np.sum(R * f.values))


def bilinear_energy(f: CylGridFunction, g: CylGridFunction, lam: float) -> float:
    """Bilinear HLS energy int int f(u) g(v) |u^-1 v|^(-lam) du dv.

    Computed as the symmetrized pairing (<g, I f> + <f, I g>)/2 so that the
    discrete form is exactly symmetric in (f, g).
    """
    if not f.same_grid(g):
        raise ValueError("f and g must live on the same grid")
    table = _table_for(f, lam)
    If = table.apply(f.values)
    Ig = table.apply(g.values)
    e1 = float(np.sum(f.weights * g.values * If))
    e2 = float(np.sum(f.weights * f.values * Ig))
    return 0.5 * (e1 + e2)


def hls_quotient(f: CylGridFunction, params: HlsParams) -> float:
    """Discrete |I_lam f|_q / |f|_p for the exponent tuple params."""
    params.validate()
    if not np.any(f.values != 0.0):
        raise ValueError("hls_quotient requires a nonzero function")
    If = fractional_integral_grid(f, params.lam)
    return lp_norm(If, params.q) / lp_norm(f, params.p)
