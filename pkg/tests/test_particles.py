import numpy as np
import pytest

from kinmix.grids import GridSpec
from kinmix.model import SpeciesMoments
from kinmix.particles import (
    ParticleSet,
    cell_sums,
    deposit,
    init_particles,
    match,
    push,
    update_weights,
)

from oracles import gaussian


def v4_remainder(x, v):
    f = v**4 / (3 * np.sqrt(2 * np.pi)) * np.exp(-(v**2) / 2)
    return (f - gaussian(1.0, 0.0, 5.0, v)) * np.ones_like(x)


class TestInit:
    def test_zero_initial_remainder(self):
        grid = GridSpec(Nx=8, Nv=32)
        ps = init_particles(lambda x, v: np.zeros_like(x), grid, 1000, seed=1)
        assert np.all(ps.w == 0.0)

    def test_determinism(self):
        grid = GridSpec(Nx=8, Nv=32)
        a = init_particles(v4_remainder, grid, 5000, seed=123)
        b = init_particles(v4_remainder, grid, 5000, seed=123)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.v, b.v) and np.array_equal(a.w, b.w)
        c = init_particles(v4_remainder, grid, 5000, seed=124)
        assert not np.array_equal(a.w, c.w)

    def test_monte_carlo_convergence(self):
        # the v^4 remainder has zero moments; the sampled global sums must
        # shrink like Np^{-1/2}
        grid = GridSpec(Nx=4, Nv=32)
        errs = {}
        for Np in (10**3, 10**4, 10**5):
            vals = []
            for seed in range(8):
                ps = init_particles(v4_remainder, grid, Np, seed=seed)
                s = np.abs([np.sum(ps.w), np.sum(ps.w * ps.v), np.sum(ps.w * ps.v**2)])
                vals.append(np.max(s))
            errs[Np] = np.mean(vals)
        assert errs[10**5] < errs[10**4] < errs[10**3]
        # absolute scale: within 6 standard errors of the sampled estimator
        ps = init_particles(v4_remainder, grid, 10**5, seed=0)
        for k in range(3):
            samples = ps.w * ps.v**k
            assert abs(np.sum(samples)) < 6.0 * np.std(samples) * np.sqrt(ps.Np)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            init_particles(lambda x, v: x, GridSpec(), 0, seed=0)


class TestPush:
    def test_zero_dt_identity(self):
        grid = GridSpec(Nx=8)
        ps = init_particles(v4_remainder, grid, 100, seed=5)
        ps2 = push(ps, 0.0, grid)
        assert np.array_equal(ps.x, ps2.x)

    def test_periodic_wrap(self):
        grid = GridSpec(Nx=8)
        ps = ParticleSet(x=np.array([0.0]), v=np.array([-1.0]), w=np.array([1.0]))
        out = push(ps, 0.5, grid)
        assert out.x[0] == pytest.approx(4 * np.pi - 0.5, abs=1e-14)

    def test_push_preserves_global_moments(self):
        grid = GridSpec(Nx=8)
        ps = init_particles(v4_remainder, grid, 2000, seed=9)
        before = [np.sum(ps.w * ps.v**k) for k in range(3)]
        out = push(ps, 0.37, grid)
        after = [np.sum(out.w * out.v**k) for k in range(3)]
        assert before == after

    def test_negative_dt_rejected(self):
        grid = GridSpec()
        ps = ParticleSet(x=np.zeros(1), v=np.zeros(1), w=np.zeros(1))
        with pytest.raises(ValueError):
            push(ps, -0.1, grid)


class TestDeposit:
    def test_zero_weights(self):
        grid = GridSpec(Nx=4, Nv=16)
        ps = init_particles(lambda x, v: np.zeros_like(x), grid, 64, seed=2)
        assert np.all(deposit(ps, grid) == 0.0)

    def test_single_particle_unit_deposit(self):
        grid = GridSpec(Lx=4 * np.pi, Nx=4)
        c = 2
        xc = (c + 0.5) * grid.dx
        ps = ParticleSet(x=np.array([xc]), v=np.array([1.7]), w=np.array([grid.dx]))
        G = deposit(ps, grid)
        assert G[0, c] == pytest.approx(1.0)
        assert G[1, c] == pytest.approx(1.7)
        assert G[2, c] == pytest.approx(1.7**2)
        assert G[3, c] == pytest.approx(1.7**3)
        G[:, c] = 0.0
        assert np.all(G == 0.0)

    def test_matched_set_deposits_zero_moments(self):
        grid = GridSpec(Nx=8, Nv=32)
        ps = init_particles(v4_remainder, grid, 20000, seed=11)
        mk = SpeciesMoments(n=np.ones(8), u=np.zeros(8), T=np.full(8, 5.0))
        ps, skipped = match(ps, grid, mk, 1.0)
        assert skipped == 0
        G = deposit(ps, grid)
        assert np.max(np.abs(G[:3])) < 1e-12


class TestUpdateWeights:
    def test_pure_exponential_decay(self):
        grid = GridSpec(Nx=4)
        ps = init_particles(v4_remainder, grid, 500, seed=3)
        lam, dt = 2.5, 0.2
        out = update_weights(ps, lambda x, v, t: np.zeros_like(x), lam, dt, grid)
        assert np.allclose(out.w, ps.w * np.exp(-lam * dt), rtol=0, atol=0)

    def test_zero_damping_is_forward_euler(self):
        grid = GridSpec(Nx=4)
        ps = init_particles(v4_remainder, grid, 500, seed=3)
        src = lambda x, v, t: np.cos(v)
        dt = 0.1
        out = update_weights(ps, src, 0.0, dt, grid)
        expected = ps.w + dt * np.cos(ps.v) * grid.Lx * grid.Lv / ps.Np
        assert np.allclose(out.w, expected, rtol=1e-15)

    def test_small_damping_approaches_euler(self):
        grid = GridSpec(Nx=4)
        ps = init_particles(v4_remainder, grid, 200, seed=4)
        src = lambda x, v, t: np.sin(v)
        dt = 0.05
        w_euler = update_weights(ps, src, 0.0, dt, grid).w
        w_small = update_weights(ps, src, 1e-10, dt, grid).w
        assert np.max(np.abs(w_small - w_euler)) < 1e-10

    def test_negative_damping_rejected(self):
        grid = GridSpec(Nx=4)
        ps = init_particles(v4_remainder, grid, 10, seed=4)
        with pytest.raises(ValueError):
            update_weights(ps, lambda x, v, t: np.zeros_like(x), -1.0, 0.1, grid)

    def test_equilibrium_stays_zero(self):
        grid = GridSpec(Nx=4)
        ps = init_particles(lambda x, v: np.zeros_like(x), grid, 500, seed=6)
        out = update_weights(ps, lambda x, v, t: np.zeros_like(x), 3.0, 0.1, grid)
        assert np.all(out.w == 0.0)


class TestMatch:
    def hand_case(self):
        # single cell; Lx*Lv/Np = 3*1/3 = 1 so the correction weights are
        # exactly c(v_p); M is the standard normal
        grid = GridSpec(Lx=1.0, Nx=1, Lv=3.0, Nv=8)
        ps = ParticleSet(
            x=np.full(3, 0.5), v=np.array([-1.0, 0.0, 1.0]), w=np.array([1.0, 1.0, 1.0])
        )
        mk = SpeciesMoments(n=np.ones(1), u=np.zeros(1), T=np.ones(1))
        return grid, ps, mk

    def test_hand_solved_three_particle_cell(self):
        grid, ps, mk = self.hand_case()
        out, skipped = match(ps, grid, mk, 1.0)
        assert skipped == 0
        sums = cell_sums(out, grid)
        assert np.max(np.abs(sums)) < 1e-12
        # independent monomial-basis solve of the same 3x3 system
        phi = gaussian(1.0, 0.0, 1.0, ps.v)
        A = np.array([[np.sum(ps.v ** (i + j) * phi) for j in range(3)] for i in range(3)])
        b = np.array([np.sum(ps.w * ps.v**k) for k in range(3)])
        a = np.linalg.solve(A, b)
        w_expected = ps.w - (a[0] + a[1] * ps.v + a[2] * ps.v**2) * phi
        assert np.allclose(out.w, w_expected, atol=1e-12)

    def test_already_matched_unchanged(self):
        grid = GridSpec(Nx=8, Nv=32)
        ps = init_particles(v4_remainder, grid, 20000, seed=13)
        mk = SpeciesMoments(n=np.ones(8), u=np.zeros(8), T=np.full(8, 5.0))
        once, _ = match(ps, grid, mk, 1.0)
        twice, _ = match(once, grid, mk, 1.0)
        assert np.max(np.abs(twice.w - once.w)) < 1e-12

    def test_undersampled_cell_skipped(self):
        grid = GridSpec(Lx=2.0, Nx=2, Lv=4.0, Nv=8)
        # cell 0 has two particles, cell 1 has four
        x = np.array([0.2, 0.6, 1.2, 1.4, 1.6, 1.9])
        v = np.array([-1.0, 1.0, -1.5, -0.5, 0.5, 1.5])
        w = np.ones(6)
        ps = ParticleSet(x=x, v=v, w=w)
        mk = SpeciesMoments(n=np.ones(2), u=np.zeros(2), T=np.ones(2))
        out, skipped = match(ps, grid, mk, 1.0)
        assert skipped == 1
        assert np.array_equal(out.w[:2], w[:2])  # untouched cell
        assert np.max(np.abs(cell_sums(out, grid)[:, 1])) < 1e-12

    def test_degenerate_velocities_skipped(self):
        grid = GridSpec(Lx=1.0, Nx=1, Lv=4.0, Nv=8)
        ps = ParticleSet(x=np.full(4, 0.5), v=np.full(4, 0.3), w=np.ones(4))
        mk = SpeciesMoments(n=np.ones(1), u=np.zeros(1), T=np.ones(1))
        out, skipped = match(ps, grid, mk, 1.0)
        assert skipped == 1
        assert np.array_equal(out.w, ps.w)

    def test_matches_independent_monomial_solver(self):
        # the per-cell correction polynomial is unique, so the package's
        # scaled-basis solve must reproduce a from-scratch monomial solve
        grid = GridSpec(Lx=2.0, Nx=4, Lv=6.0, Nv=8)
        rng = np.random.default_rng(23)
        Np = 600
        ps = ParticleSet(
            x=rng.uniform(0, grid.Lx, Np),
            v=rng.uniform(-3, 3, Np),
            w=rng.normal(size=Np) * 0.1,
        )
        mk = SpeciesMoments(n=np.full(4, 1.1), u=np.full(4, 0.2), T=np.full(4, 0.8))
        out, skipped = match(ps, grid, mk, 1.0)
        assert skipped == 0

        factor = grid.Lx * grid.Lv / Np
        w_ref = ps.w.copy()
        idx = grid.cell_index(ps.x)
        for c in range(grid.Nx):
            sel = idx == c
            vv = ps.v[sel]
            phi = gaussian(1.1, 0.2, 0.8, vv) * factor
            A = np.array([[np.sum(vv ** (i + j) * phi) for j in range(3)] for i in range(3)])
            b = np.array([np.sum(ps.w[sel] * vv**k) for k in range(3)])
            a = np.linalg.solve(A, b)
            w_ref[sel] -= (a[0] + a[1] * vv + a[2] * vv**2) * phi
        assert np.allclose(out.w, w_ref, atol=1e-12)

    def test_third_moment_not_matched(self):
        # matching controls three moments only; <v^3 g> moves (documented)
        grid = GridSpec(Nx=4, Nv=32)
        ps = init_particles(v4_remainder, grid, 8000, seed=17)
        mk = SpeciesMoments(n=np.ones(4), u=np.zeros(4), T=np.full(4, 5.0))
        before = deposit(ps, grid)[3].copy()
        out, _ = match(ps, grid, mk, 1.0)
        after = deposit(out, grid)[3]
        assert not np.allclose(before, after, atol=1e-12)
