"""Weighted-particle representation of the kinetic remainders.

Particles sample phase space uniformly and carry all the state in their
weights w = g * Lx * Lv / Np.  Transport pushes positions, the stiff part of
the source is integrated exactly (Duhamel), and a per-cell matching solve
keeps the discrete moments of the remainder at zero, which is what the
micro-macro decomposition requires of g.

All per-cell reductions go through bincount in particle order, so repeated
runs with the same seed are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec
from .model import SpeciesMoments


@dataclass
class ParticleSet:
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    species: int = 1

    def __post_init__(self):
        if not (self.x.shape == self.v.shape == self.w.shape):
            raise ValueError("x, v, w must share one length")

    @property
    def Np(self) -> int:
        return self.x.size


def init_particles(g0, grid: GridSpec, Np: int, seed, species: int = 1) -> ParticleSet:
    """Uniform phase-space sampling; w = g0(x, v) * Lx * Lv / Np.

    g0 must be vectorized over (x, v).  seed is an int or SeedSequence;
    identical seeds give bit-identical sets.
    """
    if Np <= 0:
        raise ValueError("Np must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, grid.Lx, Np)
    v = rng.uniform(-0.5 * grid.Lv, 0.5 * grid.Lv, Np)
    w = np.asarray(g0(x, v), dtype=float) * (grid.Lx * grid.Lv / Np)
    if w.shape != x.shape:
        w = np.broadcast_to(w, x.shape).copy()
    return ParticleSet(x=x, v=v, w=w, species=species)


def push(ps: ParticleSet, dt: float, grid: GridSpec) -> ParticleSet:
    """Free transport: x <- wrap(x + v dt); velocities and weights untouched."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    return ParticleSet(x=grid.wrap(ps.x + ps.v * dt), v=ps.v, w=ps.w, species=ps.species)


def deposit(ps: ParticleSet, grid: GridSpec, idx: np.ndarray | None = None) -> np.ndarray:
    """Per-cell NGP moments, shape (4, Nx): (<g>, <vg>, <v^2 g>, <v^3 g>)/dx."""
    if idx is None:
        idx = grid.cell_index(ps.x)
    out = np.empty((4, grid.Nx))
    wk = ps.w
    for j in range(4):
        out[j] = np.bincount(idx, weights=wk, minlength=grid.Nx)
        wk = wk * ps.v
    return out / grid.dx


def cell_sums(ps: ParticleSet, grid: GridSpec, idx: np.ndarray | None = None) -> np.ndarray:
    """Raw per-cell sums (sum w, sum w v, sum w v^2), shape (3, Nx)."""
    if idx is None:
        idx = grid.cell_index(ps.x)
    return np.stack(
        [
            np.bincount(idx, weights=ps.w, minlength=grid.Nx),
            np.bincount(idx, weights=ps.w * ps.v, minlength=grid.Nx),
            np.bincount(idx, weights=ps.w * ps.v * ps.v, minlength=grid.Nx),
        ]
    )


def update_weights(ps: ParticleSet, source_eval, lam, dt: float, grid: GridSpec, t: float = 0.0) -> ParticleSet:
    """Exact exponential (Duhamel) weight update.

    dw/dt = -lam w + s with s frozen over the step gives
    w <- w e^{-lam dt} + (1 - e^{-lam dt})/lam * s; lam -> 0 degrades to
    forward Euler.  source_eval(x, v, t) is the non-stiff micro source,
    vectorized; lam is a per-particle array (cell rates gathered by the
    caller) or a scalar.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("damping rate must be >= 0")
    s = np.asarray(source_eval(ps.x, ps.v, t), dtype=float) * (grid.Lx * grid.Lv / ps.Np)
    decay = np.exp(-lam * dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(lam > 0.0, -np.expm1(-lam * dt) / np.where(lam > 0.0, lam, 1.0), dt)
    w = ps.w * decay + gain * s
    return ParticleSet(x=ps.x, v=ps.v, w=w, species=ps.species)


def match(ps: ParticleSet, grid: GridSpec, Mk: SpeciesMoments, mass_ratio: float, idx: np.ndarray | None = None):
    """Per-cell weight correction zeroing the discrete sums of m(v).

    Subtracts c(v) = [a0 + a1 v + a2 v^2] M_k(v) * Lx Lv / Np sampled at the
    cell's particles, with (a0, a1, a2) from an exact 3x3 solve, so that
    sum w, sum w v, sum w v^2 vanish per cell.  Internally the solve uses the
    scaled Hermite basis of the cell Maxwellian to keep the system
    well-conditioned; one refinement pass mops up round-off.

    Returns (matched ParticleSet, number of cells skipped as unsolvable).
    """
    if idx is None:
        idx = grid.cell_index(ps.x)
    n = np.broadcast_to(np.asarray(Mk.n, dtype=float), (grid.Nx,))
    u = np.broadcast_to(np.asarray(Mk.u, dtype=float), (grid.Nx,))
    th = np.broadcast_to(np.asarray(Mk.T, dtype=float) / mass_ratio, (grid.Nx,))
    if np.any(th <= 0):
        raise ValueError("matching requires T > 0 in every cell")

    sig_c = np.sqrt(th)
    uc, sc = u[idx], sig_c[idx]
    # Maxwellian shape at particle velocities, with the weight-relation factor
    Mv = (
        n[idx]
        / np.sqrt(2.0 * np.pi * th[idx])
        * np.exp(-((ps.v - uc) ** 2) / (2.0 * th[idx]))
        * (grid.Lx * grid.Lv / ps.Np)
    )
    h1 = (ps.v - uc) / sc
    h2 = h1 * h1 - 1.0
    basis = (np.ones_like(h1), h1, h2)

    # gram matrix of the basis under the empirical Maxwellian measure
    A = np.empty((grid.Nx, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            A[:, i, j] = np.bincount(idx, weights=basis[i] * basis[j] * Mv, minlength=grid.Nx)
            A[:, j, i] = A[:, i, j]

    counts = np.bincount(idx, minlength=grid.Nx)
    scale = np.abs(A).max(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        det_ok = np.abs(np.linalg.det(A)) > 1e-10 * np.where(scale > 0, scale, 1.0) ** 3
    good = (counts >= 3) & det_ok
    # empty cells have nothing to match; only populated unsolvable cells count
    skipped = int(np.count_nonzero(~good & (counts > 0)))

    w = ps.w.copy()
    moveable = good[idx]
    for _ in range(2):  # second pass removes solve round-off
        b = np.stack(
            [
                np.bincount(idx, weights=w, minlength=grid.Nx),
                np.bincount(idx, weights=w * h1, minlength=grid.Nx),
                np.bincount(idx, weights=w * h2, minlength=grid.Nx),
            ],
            axis=-1,
        )
        a = np.zeros((grid.Nx, 3))
        if np.any(good):
            a[good] = np.linalg.solve(A[good], b[good][..., None])[..., 0]
        corr = (a[idx, 0] + a[idx, 1] * h1 + a[idx, 2] * h2) * Mv
        w = np.where(moveable, w - corr, w)

    return ParticleSet(x=ps.x, v=ps.v, w=w, species=ps.species), skipped
