"""Command-line entry point: `jumplab <mode> --config FILE [overrides]`.

Output files are a pure function of (config, seed): floats are serialized
with their shortest round-trip representation, columns have a fixed order,
and lines end with LF.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import MODES, RunConfig, parse_config
from .lindblad import ensemble_evolve, entropy
from .linalg import NumericalError, hermitian_eigen
from .model import ConfigurationError
from .randwalk import (
    diffusion_evolve,
    lattice_entropy,
    sample_walk,
    torus_side,
    walk_log_density,
)
from .rng import trajectory_stream
from .sampling import run_ensemble, worker_count
from . import ipt as ipt_mod
from . import twolevel as tl


def _fmt(x) -> str:
    return repr(float(x))


def _write_lines(path: Path, lines) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _density_header(n: int) -> list[str]:
    cols = ["t"]
    for a in range(n):
        for b in range(n):
            cols += [f"re_{a}{b}", f"im_{a}{b}"]
    cols.append("S")
    return cols


def _density_row(t: float, omega: np.ndarray) -> str:
    vals = [_fmt(t)]
    for a in range(omega.shape[0]):
        for b in range(omega.shape[1]):
            vals += [_fmt(omega[a, b].real), _fmt(omega[a, b].imag)]
    vals.append(_fmt(entropy(omega)))
    return ",".join(vals)


def _grid(cfg: RunConfig) -> np.ndarray:
    n = int(np.floor(cfg.t_max / cfg.output_grid_dt + 1e-9))
    return np.round(np.arange(n + 1) * cfg.output_grid_dt, 12)


def _cvec(v: np.ndarray) -> list[list[float]]:
    return [[float(x.real), float(x.imag)] for x in v]


def _run_ensemble_mode(cfg: RunConfig, out: Path) -> None:
    grid = _grid(cfg)
    lines = [",".join(_density_header(cfg.model.n_levels))]
    for t in grid:
        lines.append(_density_row(t, ensemble_evolve(cfg.model, cfg.initial, float(t))))
    _write_lines(out / "ensemble.csv", lines)
    print(f"ensemble: wrote {len(grid)} grid points to {out / 'ensemble.csv'}")


def _run_unravel_mode(cfg: RunConfig, out: Path, mode: str) -> None:
    grid = _grid(cfg)
    t0 = time.perf_counter()
    result = run_ensemble(
        cfg.model,
        cfg.initial,
        cfg.t_max,
        grid,
        cfg.trajectories,
        cfg.seed,
        mode=mode,
        keep_trajectories=True,
    )
    wall = time.perf_counter() - t0
    with (out / "trajectories.jsonl").open("w", encoding="ascii", newline="\n") as fh:
        for k, traj in enumerate(result.trajectories):
            rec = {
                "index": k,
                "jumps": [
                    {"t": ev.time, "channel": ev.channel, "post_state": _cvec(ev.post_state)}
                    for ev in traj.events
                ],
                "samples": [
                    {"t": float(t), "state": _cvec(traj.states[i])}
                    for i, t in enumerate(traj.times)
                ],
                "log_density": traj.log_density,
            }
            fh.write(json.dumps(rec) + "\n")
    mean_lines = [",".join(_density_header(cfg.model.n_levels))]
    comp_lines = ["t,max_abs_dev"]
    max_dev = 0.0
    for i, t in enumerate(grid):
        mean_lines.append(_density_row(float(t), result.mean_states[i]))
        exact = ensemble_evolve(cfg.model, cfg.initial, float(t))
        dev = float(np.max(np.abs(result.mean_states[i] - exact)))
        max_dev = max(max_dev, dev)
        comp_lines.append(",".join([_fmt(t), _fmt(dev)]))
    _write_lines(out / "ensemble_mean.csv", mean_lines)
    _write_lines(out / "comparison.csv", comp_lines)
    hist = " ".join(f"{k}:{v}" for k, v in result.jump_histogram.items())
    print(f"{mode}: {cfg.trajectories} trajectories, jump histogram {{{hist}}}")
    print(f"{mode}: max deviation from exact flow {max_dev:.4f}")
    print(f"{mode}: wall time {wall:.2f} s with {worker_count(None)} workers")


def _run_twolevel_mode(cfg: RunConfig, out: Path) -> None:
    tl.require_two_level(cfg.model)
    n_vec = tl.bloch_from_density(cfg.initial)
    if abs(np.linalg.norm(n_vec) - 1.0) > 1e-9:
        raise ConfigurationError("initial: twolevel mode needs a pure initial state")
    alpha = cfg.model.alpha
    e3 = float(n_vec[2])
    gamma = float(np.arctan2(n_vec[1], n_vec[0])) if n_vec[0] ** 2 + n_vec[1] ** 2 > 0 else 0.0
    grid = _grid(cfg)
    header = "t,n1,n2,n3,e3_nodetect,pnj_nodetect,e3_detect,pnj_detect"
    lines = [header]
    for t in grid:
        nb = tl.ensemble_bloch(e3, gamma, alpha, float(t))
        row = [
            _fmt(t),
            _fmt(nb[0]),
            _fmt(nb[1]),
            _fmt(nb[2]),
            _fmt(tl.nodetect_flow_e3(e3, alpha, float(t))),
            _fmt(tl.nodetect_survival_time(e3, alpha, float(t))),
            _fmt(tl.detect_flow_e3(e3, alpha, float(t))),
            _fmt(tl.detect_survival_time(e3, alpha, float(t))),
        ]
        lines.append(",".join(row))
    _write_lines(out / "bloch.csv", lines)
    print(f"twolevel: wrote closed forms for e3={e3:g} to {out / 'bloch.csv'}")


def _run_randwalk_mode(cfg: RunConfig, out: Path) -> None:
    nu = cfg.randwalk["nu"]
    d_const = cfg.randwalk["diffusion"]
    side = cfg.randwalk["torus_side"] or torus_side(d_const, nu, cfg.t_max)
    rho0 = np.zeros((side,) * nu)
    center = (side // 2,) * nu
    rho0[center] = 1.0
    rho_t = diffusion_evolve(rho0, d_const, cfg.t_max)
    lines = [",".join([f"x{k}" for k in range(nu)] + ["rho"])]
    for site in np.ndindex(rho_t.shape):
        lines.append(",".join([str(c - side // 2) for c in site] + [_fmt(rho_t[site])]))
    _write_lines(out / "density.csv", lines)

    walk_lines = ["index,jumps,sq_displacement,log_density"]
    msd = 0.0
    mean_jumps = 0.0
    for k in range(cfg.trajectories):
        walk = sample_walk(d_const, nu, cfg.t_max, trajectory_stream(cfg.seed, k))
        disp = walk.positions()[-1] - walk.start
        sq = float(np.sum(disp.astype(float) ** 2))
        msd += sq
        mean_jumps += len(walk.times)
        walk_lines.append(
            ",".join(
                [str(k), str(len(walk.times)), _fmt(sq), _fmt(walk_log_density(walk, d_const, nu))]
            )
        )
    _write_lines(out / "walks.csv", walk_lines)
    msd /= cfg.trajectories
    mean_jumps /= cfg.trajectories
    print(
        f"randwalk: nu={nu} D={d_const:g} side={side}; entropy(t)={lattice_entropy(rho_t):.6f}; "
        f"mean jumps {mean_jumps:.3f} (expect {2 * nu * d_const * cfg.t_max:.3f}); "
        f"MSD {msd:.3f} (expect {2 * nu * d_const * cfg.t_max:.3f})"
    )


def _run_ipt_mode(cfg: RunConfig, out: Path) -> None:
    h0 = cfg.ipt["h0"]
    v = cfg.ipt["v"]
    path = ipt_mod.ipt_integrate(ipt_mod.linear_curve(h0, v), cfg.ipt["steps"])
    n = path.energies.shape[1]
    lines = [",".join(["t"] + [f"E_{j}" for j in range(n)])]
    for k, t in enumerate(path.ts):
        lines.append(",".join([_fmt(t)] + [_fmt(e) for e in path.energies[k]]))
    _write_lines(out / "eigenpath.csv", lines)
    exact = hermitian_eigen(h0 + v)
    err = float(np.max(np.abs(np.sort(path.energies[-1]) - np.sort(exact.eigenvalues))))
    print(f"ipt: integrated {cfg.ipt['steps']} steps; terminal eigenvalue error {err:.3e}")


def run(cfg: RunConfig) -> None:
    """Dispatch a validated configuration and write artifacts to disk."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "ensemble":
        _run_ensemble_mode(cfg, out)
    elif cfg.mode == "unravel-nodetect":
        _run_unravel_mode(cfg, out, "nodetect")
    elif cfg.mode == "unravel-detect":
        _run_unravel_mode(cfg, out, "detect")
    elif cfg.mode == "twolevel":
        _run_twolevel_mode(cfg, out)
    elif cfg.mode == "randwalk":
        _run_randwalk_mode(cfg, out)
    elif cfg.mode == "ipt":
        _run_ipt_mode(cfg, out)
    else:  # pragma: no cover - parse_config already rejects this
        raise ConfigurationError(f"run.mode: unknown mode {cfg.mode!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jumplab",
        description="Simulate jump unravelings of few-level atom dynamics and companions.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--trajectories", type=int)
        p.add_argument("--t-max", type=float, dest="t_max")
        p.add_argument("--out")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, mode=args.mode)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigurationError("run.seed: must be a 64-bit unsigned integer")
            cfg.seed = args.seed
        if args.trajectories is not None:
            if args.trajectories < 1:
                raise ConfigurationError("run.trajectories: must be a positive integer")
            cfg.trajectories = args.trajectories
        if args.t_max is not None:
            if args.t_max <= 0:
                raise ConfigurationError("run.t_max: must be > 0")
            cfg.t_max = args.t_max
        if args.out is not None:
            cfg.output_dir = args.out
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        run(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
