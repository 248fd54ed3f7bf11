"""Deterministic discrete-velocity solver for the full two-species BGK
system on an (x, v) grid.  First-order upwind transport + pointwise
exponential relaxation; used as a cross-validation oracle for the
micro-macro scheme, so clarity beats speed throughout.

Discrete Maxwellians are renormalized (a 3x3 correction per cell) so their
grid moments match the target moments exactly, which keeps the conservation
checks sharp on coarse velocity grids.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec
from .model import MixtureParams, SpeciesMoments, exchange_quantities


class CFLError(RuntimeError):
    pass


@dataclass
class GridDistribution:
    """f1, f2 sampled on (Nx cells) x (Nv velocity nodes)."""

    f1: np.ndarray
    f2: np.ndarray
    grid: GridSpec
    t: float = 0.0

    def min_value(self) -> float:
        return float(min(self.f1.min(), self.f2.min()))


def cellwise_moments(f: np.ndarray, grid: GridSpec, mass_ratio: float) -> SpeciesMoments:
    """(n, u, T) per cell by trapezoid over the velocity nodes."""
    v, wq = grid.v_nodes, grid.v_weights
    n = f @ wq
    u = (f @ (wq * v)) / n
    T = ((f @ (wq * v * v)) / n - u * u) * mass_ratio
    return SpeciesMoments(n=n, u=u, T=T)


def discrete_maxwellian_rows(n, u, th, grid: GridSpec) -> np.ndarray:
    """Per-cell Maxwellian samples (Nx, Nv) with grid moments matched to
    (n, n u, n(th + u^2)) exactly via a batched 3x3 Hermite correction."""
    v, wq = grid.v_nodes, grid.v_weights
    n = np.atleast_1d(np.asarray(n, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    th = np.atleast_1d(np.asarray(th, dtype=float))
    M = n[:, None] / np.sqrt(2.0 * np.pi * th[:, None]) * np.exp(
        -((v[None, :] - u[:, None]) ** 2) / (2.0 * th[:, None])
    )
    h1 = (v[None, :] - u[:, None]) / np.sqrt(th[:, None])
    h2 = h1 * h1 - 1.0
    H = np.stack([np.ones_like(h1), h1, h2], axis=1)  # (Nx, 3, Nv)
    A = np.einsum("civ,v,cjv->cij", H, wq, H * M[:, None, :])
    r = -np.einsum("civ,v,cv->ci", H, wq, M)
    r[:, 0] += n
    c = np.linalg.solve(A, r[..., None])[..., 0]
    return M * (1.0 + c[:, 0, None] + c[:, 1, None] * h1 + c[:, 2, None] * h2)


def _upwind_transport(f: np.ndarray, grid: GridSpec, dt: float) -> np.ndarray:
    v = grid.v_nodes
    cr = dt / grid.dx * v
    fm = np.roll(f, 1, axis=0)   # cell i-1
    fp = np.roll(f, -1, axis=0)  # cell i+1
    pos = np.maximum(cr, 0.0)
    neg = np.minimum(cr, 0.0)
    return f - pos * (f - fm) - neg * (fp - f)


def _relax(state: GridDistribution, p: MixtureParams, dt: float) -> None:
    """Pointwise exponential relaxation toward own + interaction Maxwellians,
    with the cell moments advanced conservatively and then re-pinned."""
    grid = state.grid
    mr2 = p.mass_ratio2
    m1 = cellwise_moments(state.f1, grid, 1.0)
    m2 = cellwise_moments(state.f2, grid, mr2)
    ex = exchange_quantities(m1, m2, p)

    # conservative moment update (Heun, sub-stepped when stiff)
    rate = p.nu12 * max(float(np.max(m2.n)) / p.epst1, float(np.max(m1.n)) / p.epst2)
    nsub = 1 if dt * rate <= 0.5 else int(np.ceil(2.0 * dt * rate))
    h = dt / nsub
    P1, E1 = m1.n * m1.u, m1.n * (m1.T + m1.u**2)
    P2, E2 = m2.n * m2.u, m2.n * (m2.T / mr2 + m2.u**2)
    c1, c2 = m1, m2
    for _ in range(nsub):
        e = exchange_quantities(c1, c2, p)
        b1 = p.nu12 * c2.n / p.epst1
        b2 = p.nu12 * c1.n / p.epst2
        k1 = (
            b1 * c1.n * (e.u12 - c1.u),
            b1 * c1.n * (e.T12 + e.u12**2 - c1.T - c1.u**2),
            b2 * c2.n * (e.u21 - c2.u),
            b2 * c2.n * ((e.T21 - c2.T) / mr2 + e.u21**2 - c2.u**2),
        )
        u1a = (P1 + h * k1[0]) / c1.n
        u2a = (P2 + h * k1[2]) / c2.n
        c1a = SpeciesMoments(n=c1.n, u=u1a, T=(E1 + h * k1[1]) / c1.n - u1a**2)
        c2a = SpeciesMoments(n=c2.n, u=u2a, T=((E2 + h * k1[3]) / c2.n - u2a**2) * mr2)
        ea = exchange_quantities(c1a, c2a, p)
        b1a = p.nu12 * c2a.n / p.epst1
        b2a = p.nu12 * c1a.n / p.epst2
        k2 = (
            b1a * c1a.n * (ea.u12 - c1a.u),
            b1a * c1a.n * (ea.T12 + ea.u12**2 - c1a.T - c1a.u**2),
            b2a * c2a.n * (ea.u21 - c2a.u),
            b2a * c2a.n * ((ea.T21 - c2a.T) / mr2 + ea.u21**2 - c2a.u**2),
        )
        P1 += 0.5 * h * (k1[0] + k2[0])
        E1 += 0.5 * h * (k1[1] + k2[1])
        P2 += 0.5 * h * (k1[2] + k2[2])
        E2 += 0.5 * h * (k1[3] + k2[3])
        c1 = SpeciesMoments(n=c1.n, u=P1 / c1.n, T=E1 / c1.n - (P1 / c1.n) ** 2)
        c2 = SpeciesMoments(n=c2.n, u=P2 / c2.n, T=(E2 / c2.n - (P2 / c2.n) ** 2) * mr2)

    a1 = p.nu12 * m1.n / p.eps1
    b1 = p.nu12 * m2.n / p.epst1
    a2 = p.nu12 * m2.n / p.eps2
    b2 = p.nu12 * m1.n / p.epst2
    lam1, lam2 = a1 + b1, a2 + b2

    Md1 = discrete_maxwellian_rows(m1.n, m1.u, m1.T, grid)
    Md12 = discrete_maxwellian_rows(m1.n, ex.u12, ex.T12, grid)
    Md2 = discrete_maxwellian_rows(m2.n, m2.u, m2.T / mr2, grid)
    Md21 = discrete_maxwellian_rows(m2.n, ex.u21, ex.T21 / mr2, grid)

    Mbar1 = (a1[:, None] * Md1 + b1[:, None] * Md12) / lam1[:, None]
    Mbar2 = (a2[:, None] * Md2 + b2[:, None] * Md21) / lam2[:, None]
    state.f1 = Mbar1 + (state.f1 - Mbar1) * np.exp(-lam1 * dt)[:, None]
    state.f2 = Mbar2 + (state.f2 - Mbar2) * np.exp(-lam2 * dt)[:, None]

    mg1 = cellwise_moments(state.f1, grid, 1.0)
    mg2 = cellwise_moments(state.f2, grid, mr2)
    state.f1 = state.f1 + discrete_maxwellian_rows(c1.n, c1.u, c1.T, grid) - discrete_maxwellian_rows(
        mg1.n, mg1.u, mg1.T, grid
    )
    state.f2 = state.f2 + discrete_maxwellian_rows(c2.n, c2.u, c2.T / mr2, grid) - discrete_maxwellian_rows(
        mg2.n, mg2.u, mg2.T / mr2, grid
    )


def dvm_step(state: GridDistribution, p: MixtureParams, dt: float) -> GridDistribution:
    """First-order splitting: upwind transport in x, then relaxation built
    from the post-transport moments."""
    grid = state.grid
    vmax = float(np.max(np.abs(grid.v_nodes)))
    if grid.Nx > 1 and dt > grid.dx / vmax:
        raise CFLError(f"dt={dt} violates upwind CFL: need dt <= {grid.dx / vmax}")
    out = GridDistribution(
        f1=_upwind_transport(state.f1, grid, dt) if grid.Nx > 1 else state.f1.copy(),
        f2=_upwind_transport(state.f2, grid, dt) if grid.Nx > 1 else state.f2.copy(),
        grid=grid,
        t=state.t + dt,
    )
    _relax(out, p, dt)
    return out


def dvm_run(state: GridDistribution, p: MixtureParams, dt: float, t_end: float) -> GridDistribution:
    nsteps = int(round(t_end / dt))
    for _ in range(nsteps):
        state = dvm_step(state, p, dt)
    return state
