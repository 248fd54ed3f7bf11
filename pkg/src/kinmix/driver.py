"""Micro-macro time stepping and full runs.

One step, in this fixed order: push particles, deposit and differentiate the
kinetic moments, advance the macro state, rebuild the Maxwellian fields and
update particle weights (Duhamel against the per-cell damping rate), then
re-match so every cell's remainder keeps zero discrete moments.

The micro source for species k combines three pieces that all project onto
the same local Maxwellian span, so their projections are assembled from one
summed moment triple per cell:

    S = -(1 - Pi)(v dx M_k) + Pi(v dx g_kk) + (nu12 n_j / epst_k)(M_kj - Pi M_kj)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig, build_initial_condition, mixture_params
from .grids import GridSpec
from .homogeneous import analytic_temperature_gap, analytic_velocity_gap, moment_ode_step
from .macrofv import MacroState, conserved_from_moments, fv_step, moments_from_conserved
from .model import MixtureParams, SpeciesMoments, exchange_quantities, maxwellian
from .particles import deposit, init_particles, match, push, update_weights
from . import reference


@dataclass
class SimState:
    macro: MacroState
    ps1: ParticleSet
    ps2: ParticleSet
    step_index: int = 0

    @property
    def t(self) -> float:
        return self.macro.t


@dataclass
class StepDiagnostics:
    skipped_cells: int = 0


def _centered_dx(arr: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(arr, -1, axis=0) - np.roll(arr, 1, axis=0)) / (2.0 * dx)


def _micro_source(
    species: int,
    grid: GridSpec,
    mk: SpeciesMoments,
    n_other: np.ndarray,
    u_cross,
    theta_cross,
    p: MixtureParams,
    g_moments,
    transport: bool,
    cached_idx=None,
):
    """Vectorized micro source S(x, v) for one species plus its damping rate.

    mk holds the per-cell fields of species k; (u_cross, theta_cross) are the
    interaction-Maxwellian parameters, g_moments the deposited remainder
    moments (rows <g>, <vg>, <v^2 g>, <v^3 g>) or None when transport is off.
    cached_idx is an optional (positions, cell indices) pair reused when the
    source is evaluated at exactly that positions array.
    """
    mr = 1.0 if species == 1 else p.mass_ratio2
    eps_k = p.eps1 if species == 1 else p.eps2
    epst_k = p.epst1 if species == 1 else p.epst2
    n = np.asarray(mk.n, dtype=float)
    u = np.asarray(mk.u, dtype=float)
    th = np.asarray(mk.T, dtype=float) / mr
    rate = p.nu12 * np.asarray(n_other, dtype=float) / epst_k

    # moments of the interaction Maxwellian against (1, v-u, |v-u|^2)
    duc = u_cross - u
    mc0 = n
    mc1 = n * duc
    mc2 = n * (theta_cross + duc * duc)

    comb0 = -rate * mc0
    comb1 = -rate * mc1
    comb2 = -rate * mc2

    if transport:
        dx = grid.dx
        A = _centered_dx(n, dx) / n
        B = _centered_dx(u, dx) / th
        Cc = _centered_dx(th, dx) / (2.0 * th * th)
        # Gaussian moments of phi1 = v dx M = v M [A + B(v-u) + C((v-u)^2 - th)]
        comb0 = comb0 + n * (u * A + th * B)
        comb1 = comb1 + n * (th * A + u * th * B + 2.0 * th * th * Cc)
        comb2 = comb2 + n * (u * th * A + 3.0 * th * th * B + 2.0 * u * th * th * Cc)
        dG1 = _centered_dx(g_moments[1], dx)
        dG2 = _centered_dx(g_moments[2], dx)
        dG3 = _centered_dx(g_moments[3], dx)
        comb0 = comb0 + dG1
        comb1 = comb1 + dG2 - u * dG1
        comb2 = comb2 + dG3 - 2.0 * u * dG2 + u * u * dG1
    else:
        A = B = Cc = None

    thc = np.asarray(theta_cross, dtype=float)
    uc = np.asarray(u_cross, dtype=float)

    def source_eval(x, v, t):
        if cached_idx is not None and x is cached_idx[0]:
            idx = cached_idx[1]
        else:
            idx = grid.cell_index(x)
        up, thp, np_ = u[idx], th[idx], n[idx]
        w = v - up
        Mk_v = np_ / np.sqrt(2.0 * np.pi * thp) * np.exp(-(w * w) / (2.0 * thp))
        # combined projection Pi(phi1 + phi2 - rate*M_kj)
        bracket = comb0[idx] + w * comb1[idx] / thp + (w * w / (2.0 * thp) - 0.5) * (
            comb2[idx] / thp - comb0[idx]
        )
        out = bracket * Mk_v / np_
        if transport:
            out = out - v * Mk_v * (A[idx] + B[idx] * w + Cc[idx] * (w * w - thp))
        thcp = thc[idx]
        Mkj_v = np_ / np.sqrt(2.0 * np.pi * thcp) * np.exp(-((v - uc[idx]) ** 2) / (2.0 * thcp))
        return out + rate[idx] * Mkj_v

    lam = p.nu12 * (n / eps_k + np.asarray(n_other, dtype=float) / epst_k)
    return source_eval, lam


def step(
    sim: SimState,
    p: MixtureParams,
    grid: GridSpec,
    dt: float,
    transport: bool = True,
    cfl: float = 0.5,
    substep_source: bool = True,
):
    """Advance the coupled system by dt; returns (new SimState, diagnostics)."""
    mr2 = p.mass_ratio2
    ps1, ps2 = sim.ps1, sim.ps2

    if transport:
        ps1 = push(ps1, dt, grid)
        ps2 = push(ps2, dt, grid)
        idx1 = grid.cell_index(ps1.x)
        idx2 = grid.cell_index(ps2.x)
        G1 = deposit(ps1, grid, idx=idx1)
        G2 = deposit(ps2, grid, idx=idx2)
        pdiv1 = np.stack([_centered_dx(G1[j], grid.dx) for j in (1, 2, 3)], axis=-1)
        pdiv2 = np.stack([_centered_dx(G2[j], grid.dx) for j in (1, 2, 3)], axis=-1)
        macro = fv_step(sim.macro, (pdiv1, pdiv2), p, dt, cfl=cfl, substep_source=substep_source)
    else:
        # space-homogeneous: macro moments follow the relaxation ODEs (RK4),
        # densities constant; no kinetic flux feeds back
        G1 = G2 = None
        idx1 = grid.cell_index(ps1.x)
        idx2 = grid.cell_index(ps2.x)
        m1 = moments_from_conserved(sim.macro.U1, 1.0)
        m2 = moments_from_conserved(sim.macro.U2, mr2)
        u1, u2, T1, T2 = moment_ode_step(m1.u, m2.u, m1.T, m2.T, p, m1.n, m2.n, dt)
        macro = MacroState(
            U1=conserved_from_moments(SpeciesMoments(n=m1.n, u=u1, T=T1), 1.0),
            U2=conserved_from_moments(SpeciesMoments(n=m2.n, u=u2, T=T2), mr2),
            dx=sim.macro.dx,
            t=sim.macro.t + dt,
        )

    m1 = moments_from_conserved(macro.U1, 1.0, where="(species 1)")
    m2 = moments_from_conserved(macro.U2, mr2, where="(species 2)")
    ex = exchange_quantities(m1, m2, p)

    se1, lam1 = _micro_source(1, grid, m1, m2.n, ex.u12, ex.T12, p, G1, transport, (ps1.x, idx1))
    se2, lam2 = _micro_source(2, grid, m2, m1.n, ex.u21, ex.T21 / mr2, p, G2, transport, (ps2.x, idx2))
    ps1 = update_weights(ps1, se1, lam1[idx1], dt, grid, macro.t)
    ps2 = update_weights(ps2, se2, lam2[idx2], dt, grid, macro.t)

    ps1, sk1 = match(ps1, grid, m1, 1.0, idx=idx1)
    ps2, sk2 = match(ps2, grid, m2, mr2, idx=idx2)

    return (
        SimState(macro=macro, ps1=ps1, ps2=ps2, step_index=sim.step_index + 1),
        StepDiagnostics(skipped_cells=sk1 + sk2),
    )


# --------------------------------------------------------------------------
# full runs

@dataclass
class Snapshot:
    t: float
    x: np.ndarray
    v: np.ndarray
    f1: np.ndarray  # (Nx, Nv)
    f2: np.ndarray


@dataclass
class RunResult:
    mode: str
    times: np.ndarray
    series: dict
    snapshots: list
    grid: GridSpec
    params: MixtureParams
    final_state: object = None
    skipped_cells_total: int = 0


def setup_simulation(cfg: RunConfig):
    """Build (grid, params, SimState) from a validated configuration."""
    grid = GridSpec(Lx=cfg.Lx, Nx=cfg.Nx, Lv=cfg.Lv, Nv=cfg.Nv)
    p = mixture_params(cfg)
    ic = build_initial_condition(cfg, p)
    xc = grid.x_centers
    mom1 = ic.moments1(xc)
    mom2 = ic.moments2(xc)
    macro = MacroState(
        U1=conserved_from_moments(mom1, 1.0),
        U2=conserved_from_moments(mom2, p.mass_ratio2),
        dx=grid.dx,
        t=0.0,
    )
    ss = np.random.SeedSequence(cfg.seed)
    s1, s2 = ss.spawn(2)
    ps1 = init_particles(ic.g1, grid, cfg.Np1, s1, species=1)
    ps2 = init_particles(ic.g2, grid, cfg.Np2, s2, species=2)
    return grid, p, SimState(macro=macro, ps1=ps1, ps2=ps2)


def _reconstruct_f(sim: SimState, p: MixtureParams, grid: GridSpec):
    """f_k = Maxwellian(macro) + binned remainder on the (x, v-bin) grid."""
    mr2 = p.mass_ratio2
    vb = grid.v_bin_centers
    out = []
    for U, mr, ps in ((sim.macro.U1, 1.0, sim.ps1), (sim.macro.U2, mr2, sim.ps2)):
        m = moments_from_conserved(U, mr)
        M = maxwellian(SpeciesMoments(n=m.n[:, None], u=m.u[:, None], T=m.T[:, None]), mr, vb[None, :])
        ci = grid.cell_index(ps.x)
        vi = np.clip(((ps.v + 0.5 * grid.Lv) / grid.dv_bin).astype(np.int64), 0, grid.Nv - 1)
        H = np.zeros((grid.Nx, grid.Nv))
        np.add.at(H, (ci, vi), ps.w)
        out.append(M + H / (grid.dx * grid.dv_bin))
    return out


def _entropy_diagnostic(sim: SimState, p: MixtureParams, grid: GridSpec) -> float:
    """H(f1|M1) + H(f2|M2) from the reconstructed, x-averaged distributions.
    Histogram noise can undershoot zero; such bins are clipped (diagnostic only)."""
    mr2 = p.mass_ratio2
    vb = grid.v_bin_centers
    total = 0.0
    for U, mr, ps in ((sim.macro.U1, 1.0, sim.ps1), (sim.macro.U2, mr2, sim.ps2)):
        m = moments_from_conserved(U, mr)
        nbar, ubar = float(np.mean(m.n)), float(np.mean(m.u))
        th = float(np.mean(m.T)) / mr
        Mv = maxwellian(SpeciesMoments(n=nbar, u=ubar, T=th * mr), mr, vb)
        lnM = np.log(nbar) - 0.5 * np.log(2.0 * np.pi * th) - ((vb - ubar) ** 2) / (2.0 * th)
        vi = np.clip(((ps.v + 0.5 * grid.Lv) / grid.dv_bin).astype(np.int64), 0, grid.Nv - 1)
        fv = Mv + np.bincount(vi, weights=ps.w, minlength=grid.Nv) / (grid.Lx * grid.dv_bin)
        fv = np.clip(fv, 0.0, None)
        pos = fv > 0
        total += float(np.sum(grid.dv_bin * fv[pos] * (np.log(fv[pos]) - lnM[pos])))
    return total


def run(cfg: RunConfig) -> RunResult:
    """Run the configured simulation and collect time series + snapshots."""
    if cfg.mode == "reference":
        return _run_reference(cfg)
    return _run_micromacro(cfg)


def _run_micromacro(cfg: RunConfig) -> RunResult:
    grid, p, sim = setup_simulation(cfg)
    transport = cfg.mode == "general"
    mr2 = p.mass_ratio2
    nsteps = int(round(cfg.t_end / cfg.dt))

    m1_0 = moments_from_conserved(sim.macro.U1, 1.0)
    m2_0 = moments_from_conserved(sim.macro.U2, mr2)
    init = (
        float(np.mean(m1_0.u)), float(np.mean(m2_0.u)),
        float(np.mean(m1_0.T)), float(np.mean(m2_0.T)),
        float(np.mean(m1_0.n)), float(np.mean(m2_0.n)),
    )

    series: dict[str, list] = {k: [] for k in (
        "gap_u_inf", "gap_T_inf", "gap_u_sq",
        "mass1", "mass2", "momentum", "energy",
        "sum_abs_w1", "sum_abs_w2",
    )}
    if not transport:
        series["analytic_gap_u_sq"] = []
        series["analytic_gap_T"] = []
        series["entropy"] = []
    times: list[float] = []
    snapshots: list[Snapshot] = []
    skipped = 0

    def record(s: SimState):
        m1 = moments_from_conserved(s.macro.U1, 1.0)
        m2 = moments_from_conserved(s.macro.U2, mr2)
        dx = grid.dx
        times.append(s.t)
        series["gap_u_inf"].append(float(np.max(np.abs(m1.u - m2.u))))
        series["gap_T_inf"].append(float(np.max(np.abs(m1.T - m2.T))))
        series["gap_u_sq"].append(float(np.max((m1.u - m2.u) ** 2)))
        series["mass1"].append(float(np.sum(m1.n) * dx))
        series["mass2"].append(float(np.sum(m2.n) * dx))
        series["momentum"].append(float(np.sum(s.macro.U1[:, 1] + mr2 * s.macro.U2[:, 1]) * dx))
        series["energy"].append(float(np.sum(s.macro.U1[:, 2] + mr2 * s.macro.U2[:, 2]) * dx))
        series["sum_abs_w1"].append(float(np.sum(np.abs(s.ps1.w))))
        series["sum_abs_w2"].append(float(np.sum(np.abs(s.ps2.w))))
        if not transport:
            series["analytic_gap_u_sq"].append(
                float(analytic_velocity_gap(s.t, init[0], init[1], p, init[4], init[5]))
            )
            series["analytic_gap_T"].append(
                float(analytic_temperature_gap(s.t, init[0], init[1], init[2], init[3], p, init[4], init[5]))
            )
            series["entropy"].append(_entropy_diagnostic(s, p, grid))
        f1, f2 = _reconstruct_f(s, p, grid)
        snapshots.append(Snapshot(t=s.t, x=grid.x_centers, v=grid.v_bin_centers, f1=f1, f2=f2))

    record(sim)
    for k in range(nsteps):
        try:
            sim, diag = step(sim, p, grid, cfg.dt, transport=transport)
        except Exception as e:
            raise RuntimeError(f"run aborted at step {k + 1}/{nsteps} (t={sim.t:.6g}): {e}") from e
        skipped += diag.skipped_cells
        if (k + 1) % cfg.output_every == 0 or k == nsteps - 1:
            record(sim)

    return RunResult(
        mode=cfg.mode,
        times=np.array(times),
        series={k: np.array(val) for k, val in series.items()},
        snapshots=snapshots,
        grid=grid,
        params=p,
        final_state=sim,
        skipped_cells_total=skipped,
    )


def _run_reference(cfg: RunConfig) -> RunResult:
    grid = GridSpec(Lx=cfg.Lx, Nx=cfg.Nx, Lv=cfg.Lv, Nv=cfg.Nv)
    p = mixture_params(cfg)
    ic = build_initial_condition(cfg, p)
    mr2 = p.mass_ratio2
    X = grid.x_centers[:, None]
    V = grid.v_nodes[None, :]
    state = reference.GridDistribution(f1=ic.f1(X, V), f2=ic.f2(X, V), grid=grid)

    nsteps = int(round(cfg.t_end / cfg.dt))
    series: dict[str, list] = {k: [] for k in (
        "gap_u_inf", "gap_T_inf", "gap_u_sq", "mass1", "mass2", "momentum", "energy",
    )}
    times: list[float] = []
    snapshots: list[Snapshot] = []

    def record(st: reference.GridDistribution):
        m1 = reference.cellwise_moments(st.f1, grid, 1.0)
        m2 = reference.cellwise_moments(st.f2, grid, mr2)
        wq, v = grid.v_weights, grid.v_nodes
        dx = grid.dx
        times.append(st.t)
        series["gap_u_inf"].append(float(np.max(np.abs(m1.u - m2.u))))
        series["gap_T_inf"].append(float(np.max(np.abs(m1.T - m2.T))))
        series["gap_u_sq"].append(float(np.max((m1.u - m2.u) ** 2)))
        series["mass1"].append(float(np.sum(m1.n) * dx))
        series["mass2"].append(float(np.sum(m2.n) * dx))
        series["momentum"].append(float(np.sum((st.f1 + mr2 * st.f2) @ (wq * v)) * dx))
        series["energy"].append(float(np.sum((st.f1 + mr2 * st.f2) @ (wq * v * v)) * dx))
        snapshots.append(Snapshot(t=st.t, x=grid.x_centers, v=grid.v_nodes, f1=st.f1.copy(), f2=st.f2.copy()))

    record(state)
    for k in range(nsteps):
        try:
            state = reference.dvm_step(state, p, cfg.dt)
        except Exception as e:
            raise RuntimeError(f"run aborted at step {k + 1}/{nsteps} (t={state.t:.6g}): {e}") from e
        if (k + 1) % cfg.output_every == 0 or k == nsteps - 1:
            record(state)

    return RunResult(
        mode="reference",
        times=np.array(times),
        series={k: np.array(val) for k, val in series.items()},
        snapshots=snapshots,
        grid=grid,
        params=p,
        final_state=state,
    )
