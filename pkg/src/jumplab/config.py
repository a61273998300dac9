"""Run configuration: a single JSON file with model / run / initial sections
(plus randwalk and ipt sections for those modes).  Complex numbers are
written as [re, im] pairs.  Every validation error names the offending key."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import AtomModel, ConfigurationError, build_model

MODES = ("ensemble", "unravel-nodetect", "unravel-detect", "twolevel", "randwalk", "ipt")


def _number(val, key: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigurationError(f"{key}: expected a number, got {val!r}")
    return float(val)


def _complex(val, key: str) -> complex:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(val)
    if isinstance(val, list) and len(val) == 2:
        return complex(_number(val[0], key), _number(val[1], key))
    raise ConfigurationError(f"{key}: expected a number or [re, im] pair, got {val!r}")


def _matrix(val, key: str) -> np.ndarray:
    if not isinstance(val, list) or not val:
        raise ConfigurationError(f"{key}: expected a nested list matrix")
    rows = []
    for r, row in enumerate(val):
        if not isinstance(row, list) or len(row) != len(val):
            raise ConfigurationError(f"{key}[{r}]: matrix must be square")
        rows.append([_complex(x, f"{key}[{r}][{c}]") for c, x in enumerate(row)])
    return np.array(rows, dtype=np.complex128)


@dataclass
class RunConfig:
    mode: str
    t_max: float
    trajectories: int
    seed: int
    output_grid_dt: float
    output_dir: str
    model: AtomModel | None = None
    initial: np.ndarray | None = None            # density matrix
    randwalk: dict = field(default_factory=dict)
    ipt: dict = field(default_factory=dict)


def _parse_initial(section, n: int) -> np.ndarray:
    from .twolevel import density_from_bloch

    if not isinstance(section, dict):
        raise ConfigurationError("initial: expected a mapping")
    keys = [k for k in ("bloch", "vector", "density") if k in section]
    if len(keys) != 1:
        raise ConfigurationError("initial: give exactly one of bloch / vector / density")
    kind = keys[0]
    if kind == "bloch":
        if n != 2:
            raise ConfigurationError("initial.bloch: only valid for two-level models")
        vec = [_number(x, f"initial.bloch[{k}]") for k, x in enumerate(section["bloch"])]
        if len(vec) != 3:
            raise ConfigurationError("initial.bloch: need three components")
        try:
            return density_from_bloch(np.array(vec))
        except ValueError as exc:
            raise ConfigurationError(f"initial.bloch: {exc}") from exc
    if kind == "vector":
        vals = section["vector"]
        if not isinstance(vals, list) or len(vals) != n:
            raise ConfigurationError(f"initial.vector: need {n} components")
        v = np.array([_complex(x, f"initial.vector[{k}]") for k, x in enumerate(vals)])
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ConfigurationError("initial.vector: zero vector")
        v = v / nrm
        return np.outer(v, v.conj())
    mat = _matrix(section["density"], "initial.density")
    if mat.shape != (n, n):
        raise ConfigurationError(f"initial.density: expected {n}x{n}")
    from .lindblad import validate_density

    try:
        return validate_density(mat)
    except ValueError as exc:
        raise ConfigurationError(f"initial.density: {exc}") from exc


def parse_config(path: str | Path, mode: str | None = None) -> RunConfig:
    """Load and fully validate a run configuration file.

    `mode` overrides the file's run.mode (the CLI passes its subcommand);
    section requirements follow the effective mode.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config file: expected a JSON object")

    run = raw.get("run", {})
    if not isinstance(run, dict):
        raise ConfigurationError("run: expected a mapping")
    mode = mode or run.get("mode", "ensemble")
    if mode not in MODES:
        raise ConfigurationError(f"run.mode: {mode!r} is not one of {MODES}")
    t_max = _number(run.get("t_max", 5.0), "run.t_max")
    if t_max <= 0:
        raise ConfigurationError(f"run.t_max: must be > 0, got {t_max}")
    trajectories = run.get("trajectories", 1000)
    if isinstance(trajectories, bool) or not isinstance(trajectories, int) or trajectories < 1:
        raise ConfigurationError(f"run.trajectories: must be a positive integer, got {trajectories!r}")
    seed = run.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigurationError(f"run.seed: must be a 64-bit unsigned integer, got {seed!r}")
    grid_dt = _number(run.get("output_grid_dt", 0.25), "run.output_grid_dt")
    if grid_dt <= 0:
        raise ConfigurationError(f"run.output_grid_dt: must be > 0, got {grid_dt}")
    output_dir = run.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigurationError(f"run.output_dir: expected a string, got {output_dir!r}")

    cfg = RunConfig(
        mode=mode,
        t_max=t_max,
        trajectories=trajectories,
        seed=seed,
        output_grid_dt=grid_dt,
        output_dir=output_dir,
    )

    if mode in ("ensemble", "unravel-nodetect", "unravel-detect", "twolevel"):
        if "model" not in raw:
            raise ConfigurationError("model: missing (required for quantum modes)")
        cfg.model = build_model(raw["model"])
        if "initial" not in raw:
            raise ConfigurationError("initial: missing (required for quantum modes)")
        cfg.initial = _parse_initial(raw["initial"], cfg.model.n_levels)
        if mode == "twolevel" and cfg.model.n_levels != 2:
            raise ConfigurationError("run.mode: twolevel requires a two-level model")
    elif mode == "randwalk":
        rw = raw.get("randwalk")
        if not isinstance(rw, dict):
            raise ConfigurationError("randwalk: missing section")
        nu = rw.get("nu", 1)
        if isinstance(nu, bool) or not isinstance(nu, int) or nu < 1:
            raise ConfigurationError(f"randwalk.nu: must be a positive integer, got {nu!r}")
        if "diffusion" not in rw:
            raise ConfigurationError("randwalk.diffusion: missing")
        diff = _number(rw["diffusion"], "randwalk.diffusion")
        if diff <= 0:
            raise ConfigurationError(f"randwalk.diffusion: must be > 0, got {diff!r}")
        side = rw.get("torus_side")
        if side is not None and (isinstance(side, bool) or not isinstance(side, int) or side < 3):
            raise ConfigurationError(f"randwalk.torus_side: must be an integer >= 3, got {side!r}")
        cfg.randwalk = {"nu": nu, "diffusion": diff, "torus_side": side}
    elif mode == "ipt":
        sec = raw.get("ipt")
        if not isinstance(sec, dict):
            raise ConfigurationError("ipt: missing section")
        for key in ("h0", "v"):
            if key not in sec:
                raise ConfigurationError(f"ipt.{key}: missing")
        h0 = _matrix(sec["h0"], "ipt.h0")
        v = _matrix(sec["v"], "ipt.v")
        if h0.shape != v.shape:
            raise ConfigurationError("ipt.v: shape must match ipt.h0")
        steps = sec.get("steps", 200)
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigurationError(f"ipt.steps: must be a positive integer, got {steps!r}")
        cfg.ipt = {"h0": h0, "v": v, "steps": steps}
    return cfg
