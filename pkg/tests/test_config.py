import json
import os

import numpy as np
import pytest

from kinmix.cli import main as cli_main
from kinmix.config import (
    ConfigError,
    PRESETS,
    RunConfig,
    build_initial_condition,
    config_to_json,
    mixture_params,
    parse_config,
    write_snapshot,
    write_timeseries,
)
from kinmix.driver import run
from kinmix.model import ParameterError, SpeciesMoments, maxwellian

from oracles import nuT, vgrid

BASE = {
    "mode": "general",
    "knudsen": {"eps1": 1.0, "epst1": 1.0, "eps2": 1.0, "epst2": 1.0},
    "time": {"dt": 0.01, "t_end": 0.1},
}


def cfg_text(**overrides):
    doc = json.loads(json.dumps(BASE))
    for key, val in overrides.items():
        if isinstance(val, dict) and key in doc:
            doc[key].update(val)
        else:
            doc[key] = val
    return json.dumps(doc)


class TestParseConfig:
    def test_defaults_accepted(self):
        cfg = parse_config(cfg_text())
        assert cfg.Lx == pytest.approx(4 * np.pi)
        assert cfg.Lv == 20.0
        assert cfg.alpha == 0.5 and cfg.delta == 0.5 and cfg.gamma == 0.1

    def test_missing_knudsen_block(self):
        doc = {"mode": "general", "time": {"dt": 0.01, "t_end": 0.1}}
        with pytest.raises(ConfigError, match="knudsen"):
            parse_config(json.dumps(doc))

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key 'extra'"):
            parse_config(cfg_text(extra=1))

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="domain.cells"):
            parse_config(cfg_text(domain={"cells": 10}))

    def test_malformed_json(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("{not json")

    def test_physics_validation_gamma(self):
        text = cfg_text(mixture={"m1": 1.0, "m2": 1.0, "gamma": 0.6})
        with pytest.raises(ParameterError, match="gamma"):
            parse_config(text)

    def test_bad_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            parse_config(cfg_text(mode="bogus"))

    def test_bad_preset(self):
        with pytest.raises(ConfigError, match="init.preset"):
            parse_config(cfg_text(init={"preset": "nope"}))

    def test_homogeneous_needs_single_cell(self):
        with pytest.raises(ConfigError, match="Nx"):
            parse_config(cfg_text(mode="homogeneous", domain={"Nx": 4}))

    def test_homogeneous_rejects_cosine(self):
        with pytest.raises(ConfigError, match="cosine"):
            parse_config(cfg_text(mode="homogeneous", domain={"Nx": 1}, init={"preset": "cosine-perturbed"}))

    def test_nonpositive_dt(self):
        with pytest.raises(ConfigError, match="dt"):
            parse_config(cfg_text(time={"dt": 0.0, "t_end": 0.1}))

    def test_roundtrip_identity(self):
        cfg = parse_config(cfg_text(
            domain={"Lx": 6.0, "Lv": 18.0, "Nx": 64, "Nv": 128},
            particles={"Np1": 1234, "Np2": 4321, "seed": 99},
            mixture={"m2": 1.5, "gamma": 0.05},
            init={"preset": "v4-maxwellian", "beta": 0.2, "T2": 5.0},
        ))
        assert parse_config(config_to_json(cfg)) == cfg

    def test_mixture_params_carries_knudsen(self):
        cfg = parse_config(cfg_text(knudsen={"eps1": 0.05, "epst1": 0.05, "eps2": 0.05, "epst2": 0.05}))
        p = mixture_params(cfg)
        assert p.eps == pytest.approx(1.0)


class TestPresets:
    def test_listing_complete(self):
        assert set(PRESETS) == {"maxwellian-maxwellian", "v4-maxwellian", "cosine-perturbed"}

    def test_maxwellian_preset_moments(self):
        cfg = RunConfig(preset="maxwellian-maxwellian")
        ic = build_initial_condition(cfg, mixture_params(cfg))
        x = np.array([0.3])
        m1, m2 = ic.moments1(x), ic.moments2(x)
        assert (m1.n[0], m1.u[0], m1.T[0]) == (1.0, 0.5, 1.0)
        assert (m2.n[0], m2.u[0], m2.T[0]) == (1.2, 0.1, 0.1)

    def test_temperature_overrides(self):
        cfg = RunConfig(preset="maxwellian-maxwellian", T1=0.08, T2=5.0)
        ic = build_initial_condition(cfg, mixture_params(cfg))
        x = np.array([0.0])
        assert ic.moments1(x).T[0] == 0.08
        assert ic.moments2(x).T[0] == 5.0

    def test_v4_preset_moments_by_quadrature(self):
        cfg = RunConfig(preset="v4-maxwellian")
        ic = build_initial_condition(cfg, mixture_params(cfg))
        v, w = vgrid()
        f1 = ic.f1(np.array([[1.0]]), v[None, :])[0]
        n, u, T = nuT(f1, v, w, 1.0)
        assert n == pytest.approx(1.0, abs=1e-10)
        assert u == pytest.approx(0.0, abs=1e-12)
        assert T == pytest.approx(5.0, abs=1e-9)

    def test_cosine_preset_moments_by_quadrature(self):
        # n2 = 1 + beta cos(x/2), u2 = 0, and the second raw moment
        # n2*T2 = 5(1 + beta cos(x/2)); the temperature itself is uniformly 5
        beta = 0.1
        cfg = RunConfig(preset="cosine-perturbed", beta=beta, m2=1.0)
        ic = build_initial_condition(cfg, mixture_params(cfg))
        v, w = vgrid()
        for xval in (0.0, 1.0, np.pi, 5.0):
            f2 = ic.f2(np.array([[xval]]), v[None, :])[0]
            n, u, T = nuT(f2, v, w, 1.0)
            amp = 1 + beta * np.cos(xval / 2)
            assert n == pytest.approx(amp, abs=1e-8)
            assert u == pytest.approx(0.0, abs=1e-12)
            assert n * T == pytest.approx(5.0 * amp, abs=1e-8)
            assert T == pytest.approx(5.0, abs=1e-8)
        m2 = ic.moments2(np.array([np.pi / 2]))
        assert m2.n[0] == pytest.approx(1 + beta * np.cos(np.pi / 4))

    def test_remainders_have_zero_moments(self):
        cfg = RunConfig(preset="v4-maxwellian")
        ic = build_initial_condition(cfg, mixture_params(cfg))
        v, w = vgrid()
        g1 = ic.g1(np.array([[0.5]]), v[None, :])[0]
        for k in range(3):
            assert abs(np.sum(w * v**k * g1)) < 1e-9

    def test_t1_override_rejected_outside_maxwellian_preset(self):
        with pytest.raises(ConfigError, match="T1"):
            parse_config(cfg_text(init={"preset": "v4-maxwellian", "T1": 2.0}))


class TestOutputs:
    def test_header_only_file(self, tmp_path):
        class Empty:
            times = np.array([])
            series = {"gap_u_inf": np.array([])}

        path = tmp_path / "ts.csv"
        write_timeseries(str(path), Empty())
        assert path.read_text() == "t,gap_u_inf\n"

    def test_timeseries_17_digits(self, tmp_path):
        class One:
            times = np.array([1.0 / 3.0])
            series = {"gap_u_inf": np.array([2.0 / 3.0])}

        path = tmp_path / "ts.csv"
        write_timeseries(str(path), One())
        lines = path.read_text().splitlines()
        assert lines[1].split(",")[0] == f"{1.0/3.0:.17g}"

    def test_homogeneous_run_emits_measured_and_analytic_columns(self, tmp_path):
        cfg = RunConfig(mode="homogeneous", Nx=1, Nv=64, Np1=500, Np2=500, seed=1,
                        dt=1e-3, t_end=0.01, output_every=5,
                        eps1=0.05, epst1=0.05, eps2=0.05, epst2=0.05)
        res = run(cfg)
        path = tmp_path / "ts.csv"
        write_timeseries(str(path), res)
        header = path.read_text().splitlines()[0].split(",")
        assert "gap_u_sq" in header and "analytic_gap_u_sq" in header and "analytic_gap_T" in header

    def test_snapshot_of_equilibrium_run_matches_maxwellian(self, tmp_path):
        # zero initial remainder: the t=0 snapshot is the Maxwellian exactly
        cfg = RunConfig(mode="general", Nx=8, Nv=32, Np1=2000, Np2=2000, seed=4,
                        dt=1e-2, t_end=0.0, preset="maxwellian-maxwellian")
        res = run(cfg)
        snap = res.snapshots[0]
        M1 = maxwellian(SpeciesMoments(n=1.0, u=0.5, T=1.0), 1.0, snap.v)
        assert np.max(np.abs(snap.f1 - M1[None, :])) < 1e-12
        files = write_snapshot(str(tmp_path), snap, 0)
        assert len(files) == 2
        body = open(files[0]).read().splitlines()
        assert body[0] == "x,v,f"
        assert len(body) == 1 + 8 * 32


class TestCLI:
    def test_presets_command(self, capsys):
        assert cli_main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_run_end_to_end(self, tmp_path):
        doc = {
            "mode": "general",
            "domain": {"Nx": 8, "Nv": 16},
            "particles": {"Np1": 500, "Np2": 500, "seed": 5},
            "time": {"dt": 0.01, "t_end": 0.02, "output_every": 1},
            "mixture": {"m1": 1.0, "m2": 1.0},
            "knudsen": {"eps1": 1.0, "epst1": 1.0, "eps2": 1.0, "epst2": 1.0},
            "init": {"preset": "cosine-perturbed", "beta": 0.1},
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(doc))
        out_dir = tmp_path / "out"
        assert cli_main(["run", str(cfg_path), "--out", str(out_dir)]) == 0
        assert (out_dir / "timeseries.csv").exists()
        assert (out_dir / "snapshot_s1_0000.csv").exists()
        assert (out_dir / "snapshot_s2_0002.csv").exists()

    def test_run_seed_override_changes_output(self, tmp_path):
        doc = {
            "mode": "general",
            "domain": {"Nx": 8, "Nv": 16},
            "particles": {"Np1": 800, "Np2": 800, "seed": 5},
            "time": {"dt": 0.01, "t_end": 0.02, "output_every": 1},
            "mixture": {"m1": 1.0, "m2": 1.0},
            "knudsen": {"eps1": 1.0, "epst1": 1.0, "eps2": 1.0, "epst2": 1.0},
            "init": {"preset": "cosine-perturbed", "beta": 0.1},
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(doc))
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert cli_main(["run", str(cfg_path), "--out", str(a)]) == 0
        assert cli_main(["run", str(cfg_path), "--out", str(b), "--seed", "77"]) == 0
        assert (a / "timeseries.csv").read_text() != (b / "timeseries.csv").read_text()

    def test_invalid_config_exits_nonzero(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text("{}")
        assert cli_main(["run", str(cfg_path)]) == 1
        assert "knudsen" in capsys.readouterr().err

    def test_missing_file_exits_nonzero(self, tmp_path):
        assert cli_main(["run", str(tmp_path / "absent.json")]) == 1
