"""Command-line front end: JSON configs in, CSV/JSON artifacts out.

Commands
--------
simulate-1d     RK4 trajectory of a Flaschka state; CSV t, a_*, b_*, H, lambda_*.
                input: {"schema": 1, "a": [...], "b": [...]}
spectral-solve  Same sampling computed through the spectral solution.
simulate-pseudo Tilde-mass trajectories and total Hamiltonian of a state file
                ({"schema": 1, "n":, "N":, "components": [...], "t":}).
transform-eval  Transform values of a measure at given points:
                {"schema": 1, "measure": <measure dict>, "theta": [...],
                 "zetas": [[re, im], ...]}.
nevanlinna-check  Residual table; {"kind": "1d", "measure": {...}, "N":, "y": [...]}
                or {"kind": "multi", "measure": <measure dict>, "k":, "ell":,
                "N":, "zeta_abs": [...]} (ray arg zeta^2 = pi/2).
iso-flow        Functional values on a time grid plus monotonicity verdict;
                {"schema": 1, "measure": <measure dict>, "t_grid": [...]}.
verify-all      Run the bundled invariant suite; prints one PASS/FAIL line
                per check.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (positivity
loss, divergence region, pole, or a failed check).  Outputs are byte-identical
across runs for identical inputs: fixed seeds, fixed summation order, floats
rendered with shortest round-trip repr.  TODA_KDQ_THREADS caps internal
parallelism.
"""

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import iso_flow, kdq, pseudo_toda, toda_1d
from .errors import (
    DivergenceRegionError,
    PoleError,
    PositivityLossError,
    RankDeficiencyError,
)
from .moment_1d import DiscreteMeasure, nevanlinna_limit_check
from .verify import format_table, run_all

__all__ = ["RunConfig", "run", "main"]

_COMMANDS = (
    "simulate-1d",
    "spectral-solve",
    "simulate-pseudo",
    "transform-eval",
    "nevanlinna-check",
    "iso-flow",
    "verify-all",
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    t_final: float = 5.0
    dt: float = 1e-3
    k_max: int = kdq.DEFAULT_KMAX
    quad_degree: int | None = None
    tol: float | None = None

    def validate(self):
        if self.command not in _COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.t_final <= 0.0 or self.dt <= 0.0:
            raise ConfigError("t-final and dt must be positive")
        if self.k_max < 0:
            raise ConfigError("kmax must be nonnegative")
        if self.command != "verify-all" and self.input_path is None:
            raise ConfigError(f"{self.command} requires --input")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _emit(text: str, output_path: str | None):
    if output_path is None:
        sys.stdout.write(text)
    else:
        with open(output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _sample_times(cfg: RunConfig) -> np.ndarray:
    n_steps = int(round(cfg.t_final / cfg.dt))
    return cfg.dt * np.arange(n_steps + 1)


def _flaschka_from_config(data: dict) -> toda_1d.TodaStateFlaschka:
    try:
        return toda_1d.TodaStateFlaschka(a=np.asarray(data["a"], float), b=np.asarray(data["b"], float))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad 1-d state: {exc}") from exc


def _run_simulate_1d(cfg: RunConfig) -> int:
    state = _flaschka_from_config(_load_json(cfg.input_path))
    traj = toda_1d.integrate_toda(state, cfg.t_final, cfg.dt)
    _emit(toda_1d.trajectory_to_csv(traj), cfg.output_path)
    return 0


def _run_spectral_solve(cfg: RunConfig) -> int:
    state = _flaschka_from_config(_load_json(cfg.input_path))
    times = _sample_times(cfg)
    n = state.n
    a_rows = np.empty((times.size, n - 1))
    b_rows = np.empty((times.size, n))
    for i, t in enumerate(times):
        s = toda_1d.spectral_solve(state, float(t))
        a_rows[i], b_rows[i] = s.a, s.b
    traj = toda_1d.Trajectory(times=times, a=a_rows, b=b_rows)
    _emit(toda_1d.trajectory_to_csv(traj), cfg.output_path)
    return 0


def _run_simulate_pseudo(cfg: RunConfig) -> int:
    try:
        state = pseudo_toda.PseudoTodaState.from_dict(_load_json(cfg.input_path))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad pseudo state: {exc}") from exc
    _emit(pseudo_toda.state_trajectory_csv(state, _sample_times(cfg)), cfg.output_path)
    return 0


def _measure_from_dict(d: dict) -> kdq.PseudoPositiveMeasure:
    try:
        return kdq.PseudoPositiveMeasure.from_dict(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad measure: {exc}") from exc


def _run_transform_eval(cfg: RunConfig) -> int:
    data = _load_json(cfg.input_path)
    mu = _measure_from_dict(data.get("measure", {}))
    # --kmax truncates the component series at the requested degree
    kept = {key: meas for key, meas in mu.components.items() if key[0] <= cfg.k_max}
    if len(kept) != len(mu.components):
        mu = kdq.PseudoPositiveMeasure(mu.n, kept, k_max=cfg.k_max)
    try:
        theta = np.asarray(data["theta"], float)
        zetas = [complex(re, im) for re, im in data["zetas"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad transform-eval config: {exc}") from exc
    rows = []
    for z in zetas:
        val = kdq.markov_stieltjes(mu, kdq.KDQPoint(z, theta))
        rows.append([z.real, z.imag, val.real, val.imag])
    _emit(_csv(["zeta_re", "zeta_im", "value_re", "value_im"], rows), cfg.output_path)
    return 0


def _run_nevanlinna(cfg: RunConfig) -> int:
    data = _load_json(cfg.input_path)
    kind = data.get("kind", "1d")
    if kind == "1d":
        try:
            mu = DiscreteMeasure.from_dict(data["measure"])
            n_trunc = int(data["N"])
            ys = [float(y) for y in data["y"]]
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad nevanlinna config: {exc}") from exc
        res = nevanlinna_limit_check(mu, n_trunc, ys)
        _emit(_csv(["y", "residual"], zip(ys, res)), cfg.output_path)
    elif kind == "multi":
        mu = _measure_from_dict(data.get("measure", {}))
        try:
            idx = (int(data["k"]), int(data["ell"]))
            n_trunc = int(data["N"])
            mods = [float(m) for m in data["zeta_abs"]]
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad nevanlinna config: {exc}") from exc
        zetas = [m * np.exp(1j * np.pi / 4) for m in mods]
        res = kdq.multi_nevanlinna_check(mu, idx, n_trunc, zetas, cfg.quad_degree)
        _emit(_csv(["zeta_abs", "residual"], zip(mods, res)), cfg.output_path)
    else:
        raise ConfigError(f"unknown nevanlinna kind {kind!r}")
    decreasing = bool(np.all(np.diff(res) < 0.0))
    below = cfg.tol is None or res[-1] <= cfg.tol
    return 0 if decreasing and below else 3


def _run_iso_flow(cfg: RunConfig) -> int:
    data = _load_json(cfg.input_path)
    mu = _measure_from_dict(data.get("measure", {}))
    state = iso_flow.state_from_measure(mu)
    t_grid = data.get("t_grid")
    if t_grid is None:
        t_grid = _sample_times(cfg)
    try:
        rep = iso_flow.monotonicity_check(
            state, [float(t) for t in t_grid], tol=cfg.tol if cfg.tol is not None else 1e-12
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    keys = sorted(rep.values)
    header = ["t"] + [f"S_k{k}_l{ell}" for k, ell in keys]
    rows = [
        [rep.times[i]] + [rep.values[key][i] for key in keys] for i in range(rep.times.size)
    ]
    _emit(_csv(header, rows), cfg.output_path)
    summary = (
        f"monotone={rep.passed} max_increase={rep.max_increase!r} "
        f"max_derivative_residual={rep.max_derivative_residual!r}\n"
    )
    sys.stdout.write(summary)
    return 0 if rep.passed else 3


def _run_verify_all(cfg: RunConfig) -> int:
    results = run_all()
    table = format_table(results)
    sys.stdout.write(table)
    if cfg.output_path is not None:
        _emit(table, cfg.output_path)
    return 0 if all(r.passed for r in results) else 3


_RUNNERS = {
    "simulate-1d": _run_simulate_1d,
    "spectral-solve": _run_spectral_solve,
    "simulate-pseudo": _run_simulate_pseudo,
    "transform-eval": _run_transform_eval,
    "nevanlinna-check": _run_nevanlinna,
    "iso-flow": _run_iso_flow,
    "verify-all": _run_verify_all,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        cfg.validate()
        return _RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (
        PositivityLossError,
        DivergenceRegionError,
        PoleError,
        RankDeficiencyError,
        OverflowError,
        ZeroDivisionError,
    ) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toda-kdq", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--input", dest="input_path", default=None)
    parser.add_argument("--output", dest="output_path", default=None)
    parser.add_argument("--t-final", dest="t_final", type=float, default=5.0)
    parser.add_argument("--dt", dest="dt", type=float, default=1e-3)
    parser.add_argument("--kmax", dest="k_max", type=int, default=kdq.DEFAULT_KMAX)
    parser.add_argument("--quad-degree", dest="quad_degree", type=int, default=None)
    parser.add_argument("--tol", dest="tol", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
