"""Run configuration, experiment presets and file output.

Configs are JSON with nested blocks (domain/particles/time/mixture/knudsen/
init); unknown keys are rejected and every physics parameter goes through
the model validator.  Outputs are plain CSV written atomically
(write-then-rename), floats at 17 significant digits.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .model import MixtureParams, SpeciesMoments, maxwellian, validate_params


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str = "general"
    # domain
    Lx: float = 4.0 * np.pi
    Lv: float = 20.0
    Nx: int = 128
    Nv: int = 512
    # particles
    Np1: int = 10_000
    Np2: int = 10_000
    seed: int = 0
    # time
    dt: float = 1e-2
    t_end: float = 1.0
    output_every: int = 1
    # mixture
    m1: float = 1.0
    m2: float = 1.5
    delta: float = 0.5
    alpha: float = 0.5
    gamma: float = 0.1
    nu12: float = 1.0
    # knudsen
    eps1: float = 1.0
    epst1: float = 1.0
    eps2: float = 1.0
    epst2: float = 1.0
    # init
    preset: str = "maxwellian-maxwellian"
    beta: float = 0.1
    T1: float | None = None
    T2: float | None = None


_SCHEMA = {
    "mode": None,
    "domain": {"Lx": "Lx", "Lv": "Lv", "Nx": "Nx", "Nv": "Nv"},
    "particles": {"Np1": "Np1", "Np2": "Np2", "seed": "seed"},
    "time": {"dt": "dt", "t_end": "t_end", "output_every": "output_every"},
    "mixture": {"m1": "m1", "m2": "m2", "delta": "delta", "alpha": "alpha", "gamma": "gamma", "nu12": "nu12"},
    "knudsen": {"eps1": "eps1", "epst1": "epst1", "eps2": "eps2", "epst2": "epst2"},
    "init": {"preset": "preset", "beta": "beta", "T1": "T1", "T2": "T2"},
}

PRESETS = {
    "maxwellian-maxwellian": "two Maxwellians: (n,u,T)=(1, 0.5, 1) and (1.2, 0.1, 0.1), m2/m1=1.5; "
    "init.T1 / init.T2 override the temperatures",
    "v4-maxwellian": "species 1 is the non-Maxwellian v^4 profile (n,u,T)=(1, 0, 5); species 2 "
    "Maxwellian (1.2, 0.1, 0.1), init.T2 overrides",
    "cosine-perturbed": "species 2 = (1 + beta cos(x/2)) * v^4 profile, species 1 Maxwellian "
    "(1, 0.5, 1); spatially inhomogeneous",
}


def mixture_params(cfg: RunConfig) -> MixtureParams:
    return validate_params(
        MixtureParams(
            m1=cfg.m1, m2=cfg.m2, delta=cfg.delta, alpha=cfg.alpha, gamma=cfg.gamma,
            eps1=cfg.eps1, epst1=cfg.epst1, eps2=cfg.eps2, epst2=cfg.epst2, nu12=cfg.nu12,
        )
    )


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("top-level document must be a JSON object")

    values: dict = {}
    for key in doc:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key '{key}'")
    if "knudsen" not in doc:
        raise ConfigError("missing required block 'knudsen'")
    if "mode" in doc:
        if doc["mode"] not in ("homogeneous", "general", "reference"):
            raise ConfigError(f"mode must be homogeneous|general|reference, got '{doc['mode']}'")
        values["mode"] = doc["mode"]
    for block, mapping in _SCHEMA.items():
        if mapping is None or block not in doc:
            continue
        sub = doc[block]
        if not isinstance(sub, dict):
            raise ConfigError(f"block '{block}' must be an object")
        for key in sub:
            if key not in mapping:
                raise ConfigError(f"unknown key '{block}.{key}'")
            values[mapping[key]] = sub[key]

    cfg = RunConfig(**values)
    _validate_fields(cfg)
    mixture_params(cfg)  # physics validation; raises ParameterError naming the bound
    return cfg


def _validate_fields(cfg: RunConfig) -> None:
    numeric = {
        "Lx": (0.0, None), "Lv": (0.0, None), "dt": (0.0, None), "t_end": (0.0, None),
    }
    for name, (lo, _hi) in numeric.items():
        val = getattr(cfg, name)
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > lo:
            raise ConfigError(f"field '{name}' must be a number > {lo}, got {val!r}")
    for name in ("Nx", "Nv", "Np1", "Np2", "output_every"):
        val = getattr(cfg, name)
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise ConfigError(f"field '{name}' must be a positive integer, got {val!r}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int):
        raise ConfigError(f"field 'seed' must be an integer, got {cfg.seed!r}")
    if cfg.preset not in PRESETS:
        raise ConfigError(f"init.preset must be one of {sorted(PRESETS)}, got '{cfg.preset}'")
    if cfg.mode == "homogeneous":
        if cfg.Nx != 1:
            raise ConfigError("domain.Nx must be 1 in homogeneous mode")
        if cfg.preset == "cosine-perturbed":
            raise ConfigError("init.preset 'cosine-perturbed' is spatially dependent; not valid in homogeneous mode")
    if cfg.T1 is not None and cfg.preset != "maxwellian-maxwellian":
        raise ConfigError("init.T1 override only applies to the maxwellian-maxwellian preset")
    if cfg.T2 is not None and cfg.preset == "cosine-perturbed":
        raise ConfigError("init.T2 override does not apply to the cosine-perturbed preset")


def config_to_json(cfg: RunConfig) -> str:
    doc = {
        "mode": cfg.mode,
        "domain": {"Lx": cfg.Lx, "Lv": cfg.Lv, "Nx": cfg.Nx, "Nv": cfg.Nv},
        "particles": {"Np1": cfg.Np1, "Np2": cfg.Np2, "seed": cfg.seed},
        "time": {"dt": cfg.dt, "t_end": cfg.t_end, "output_every": cfg.output_every},
        "mixture": {"m1": cfg.m1, "m2": cfg.m2, "delta": cfg.delta, "alpha": cfg.alpha,
                    "gamma": cfg.gamma, "nu12": cfg.nu12},
        "knudsen": {"eps1": cfg.eps1, "epst1": cfg.epst1, "eps2": cfg.eps2, "epst2": cfg.epst2},
        "init": {"preset": cfg.preset, "beta": cfg.beta},
    }
    if cfg.T1 is not None:
        doc["init"]["T1"] = cfg.T1
    if cfg.T2 is not None:
        doc["init"]["T2"] = cfg.T2
    return json.dumps(doc, indent=2)


# --------------------------------------------------------------------------
# presets

def _v4_profile(v):
    return v**4 / (3.0 * np.sqrt(2.0 * np.pi)) * np.exp(-(v * v) / 2.0)


@dataclass
class InitialCondition:
    moments1: callable  # x -> SpeciesMoments (arrays over x)
    moments2: callable
    f1: callable  # (x, v) -> distribution value (broadcasting)
    f2: callable
    g1: callable  # initial remainders f - M[moments]
    g2: callable


def build_initial_condition(cfg: RunConfig, p: MixtureParams) -> InitialCondition:
    mr2 = p.mass_ratio2
    if cfg.preset == "maxwellian-maxwellian":
        T1 = 1.0 if cfg.T1 is None else cfg.T1
        T2 = 0.1 if cfg.T2 is None else cfg.T2
        mom1 = lambda x: SpeciesMoments(n=np.ones_like(x), u=np.full_like(x, 0.5), T=np.full_like(x, T1))
        mom2 = lambda x: SpeciesMoments(n=np.full_like(x, 1.2), u=np.full_like(x, 0.1), T=np.full_like(x, T2))
        f1 = lambda x, v: maxwellian(SpeciesMoments(n=1.0, u=0.5, T=T1), 1.0, v) * np.ones_like(x)
        f2 = lambda x, v: maxwellian(SpeciesMoments(n=1.2, u=0.1, T=T2), mr2, v) * np.ones_like(x)
        zero = lambda x, v: np.zeros(np.broadcast(x, v).shape)
        return InitialCondition(mom1, mom2, f1, f2, zero, zero)

    if cfg.preset == "v4-maxwellian":
        T2 = 0.1 if cfg.T2 is None else cfg.T2
        mom1 = lambda x: SpeciesMoments(n=np.ones_like(x), u=np.zeros_like(x), T=np.full_like(x, 5.0))
        mom2 = lambda x: SpeciesMoments(n=np.full_like(x, 1.2), u=np.full_like(x, 0.1), T=np.full_like(x, T2))
        f1 = lambda x, v: _v4_profile(v) * np.ones_like(x)
        f2 = lambda x, v: maxwellian(SpeciesMoments(n=1.2, u=0.1, T=T2), mr2, v) * np.ones_like(x)
        g1 = lambda x, v: (_v4_profile(v) - maxwellian(SpeciesMoments(n=1.0, u=0.0, T=5.0), 1.0, v)) * np.ones_like(x)
        zero = lambda x, v: np.zeros(np.broadcast(x, v).shape)
        return InitialCondition(mom1, mom2, f1, f2, g1, zero)

    if cfg.preset == "cosine-perturbed":
        beta = cfg.beta
        T2 = 5.0 * mr2  # the v^4 profile has velocity variance 5
        amp = lambda x: 1.0 + beta * np.cos(x / 2.0)
        mom1 = lambda x: SpeciesMoments(n=np.ones_like(x), u=np.full_like(x, 0.5), T=np.ones_like(x))
        mom2 = lambda x: SpeciesMoments(n=amp(x), u=np.zeros_like(x), T=np.full_like(x, T2))
        f1 = lambda x, v: maxwellian(SpeciesMoments(n=1.0, u=0.5, T=1.0), 1.0, v) * np.ones_like(x)
        f2 = lambda x, v: amp(x) * _v4_profile(v)
        zero = lambda x, v: np.zeros(np.broadcast(x, v).shape)
        g2 = lambda x, v: amp(x) * (
            _v4_profile(v) - maxwellian(SpeciesMoments(n=1.0, u=0.0, T=T2), mr2, v)
        )
        return InitialCondition(mom1, mom2, f1, f2, zero, g2)

    raise ConfigError(f"unknown preset '{cfg.preset}'")


# --------------------------------------------------------------------------
# output files

def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_timeseries(path: str, result) -> None:
    """Time-series CSV: t plus the run's diagnostic columns, 17 digits."""
    cols = ["t"] + list(result.series.keys())
    lines = [",".join(cols)]
    for i, t in enumerate(result.times):
        row = [t] + [result.series[c][i] for c in cols[1:]]
        lines.append(",".join(_fmt(float(val)) for val in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_snapshot(outdir: str, snapshot, index: int) -> list[str]:
    """One CSV per species: columns x, v, f over the (x, v) grid."""
    written = []
    for tag, f in (("s1", snapshot.f1), ("s2", snapshot.f2)):
        lines = ["x,v,f"]
        for i, xi in enumerate(snapshot.x):
            for j, vj in enumerate(snapshot.v):
                lines.append(f"{_fmt(float(xi))},{_fmt(float(vj))},{_fmt(float(f[i, j]))}")
        path = os.path.join(outdir, f"snapshot_{tag}_{index:04d}.csv")
        _atomic_write(path, "\n".join(lines) + "\n")
        written.append(path)
    return written
