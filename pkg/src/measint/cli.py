"""Command-line front end.

    measint build-cluster  --preset paper-geometry --out-dir out/cluster
    measint condition      --preset six-mode-sweep --out-dir out/sweep
    measint decompose      --state out/sweep/state_000.bin --out-dir out/dec
    measint expressibility --preset expressibility-trends --workers 4 --out-dir out/expr
    measint haar-run       --preset paper-400 --out-dir out/haar

Every run writes its numeric outputs plus one ``manifest.json``. Numeric
files depend only on the config and seed; wall time lives in the manifest.
Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .cluster import build_cluster
from .conditioning import MeasurementPlan, apply_plan
from .config import ConfigError, cluster_from_config, load
from .decompose import DecompositionError, effective_circuit, reconstruct
from .io import config_hash, matrix_to_csv, read_state, write_json, write_matrix_csv, write_state, write_state_csv
from .pipelines import chop_to_window, expressibility_run, haar_run, plan_for_state, sweep_values

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class NumericError(RuntimeError):
    pass


class _Run:
    """Collects output files for the manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out_dir / name

    def state(self, stem: str, state) -> None:
        write_state(self.path(f"{stem}.bin"), state)
        write_state_csv(self.path(f"{stem}.csv"), state)

    def json(self, name: str, data) -> None:
        write_json(self.path(name), data)

    def text(self, name: str, text: str) -> None:
        self.path(name).write_text(text)


def _read_state(path: str):
    try:
        return read_state(path)
    except ValueError as exc:
        raise OSError(f"cannot read covariance file {path}: {exc}") from None


def _seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _angles_or_random(cfg_angles, count: int, rng: np.random.Generator) -> np.ndarray:
    if cfg_angles is None:
        return rng.uniform(-np.pi / 2, np.pi / 2, count)
    angles = np.asarray(cfg_angles, dtype=float)
    if angles.shape != (count,):
        raise ConfigError(f"condition.angles: expected {count} angles, got {angles.size}")
    return angles


# ---------------------------------------------------------------------------
# subcommands

def cmd_build_cluster(args, cfg: dict, seed: int, run: _Run) -> dict:
    if "cluster" not in cfg:
        raise ConfigError("missing [cluster] section")
    config = cluster_from_config(cfg["cluster"])
    state = build_cluster(config)
    run.state("state", state)
    report = {
        "n_modes": state.n_modes,
        "m_bins": config.m_bins,
        "delays": list(config.delays),
        "input_squeezing": list(config.input_squeezing()),
        "purity_residual": state.purity_residual(),
    }
    run.json("report.json", report)
    return report


def _load_plan(path: str) -> MeasurementPlan:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse plan {path}: {exc}") from None
    try:
        return MeasurementPlan.from_records(data)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid plan {path}: {exc}") from None


def cmd_condition(args, cfg: dict, seed: int, run: _Run) -> dict:
    section = dict(cfg.get("condition", {}))
    if args.strategy is not None:
        section["strategy"] = args.strategy
    plan_file = args.plan or section.get("plan_file")
    if plan_file is None and "strategy" not in section:
        raise ConfigError("no measurement plan: give --plan, condition.plan_file or a strategy")

    if args.state is not None:
        state = _read_state(args.state)
    elif "cluster" in cfg:
        state = build_cluster(cluster_from_config(cfg["cluster"]))
    else:
        raise ConfigError("no input state: give --state or a [cluster] section")
    if state.n_modes % 2:
        raise ConfigError("conditioning expects a dual-rail state with an even number of modes")

    window = section.get("window")
    if window is not None:
        try:
            state = chop_to_window(state, state.n_modes // 2, window["start"], window["length"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"condition.window: {exc}") from None

    rng = np.random.default_rng(seed)
    if plan_file is not None:
        plans = [_load_plan(plan_file)]
        sweep = None
    else:
        strategy = section["strategy"]
        n_out = section.get("n_out")
        try:
            template = plan_for_state(state, strategy, rng, n_out=n_out)
        except ValueError as exc:
            raise ConfigError(f"condition: {exc}") from None
        base = _angles_or_random(section.get("angles"), len(template.entries), rng)
        sweep = section.get("sweep")
        if sweep is None:
            plans = [template.with_angles(base)]
        else:
            index = sweep.get("index", 0)
            if not 0 <= index < len(base):
                raise ConfigError(f"condition.sweep.index {index} outside 0..{len(base) - 1}")
            values = sweep_values(sweep)
            plans = []
            for v in values:
                angles = base.copy()
                angles[index] = v
                plans.append(template.with_angles(angles))

    m_bins = state.n_modes // 2
    records = []
    for i, plan in enumerate(plans):
        try:
            plan.validate(state.n_modes)
        except ValueError as exc:
            raise ConfigError(f"plan: {exc}") from None
        out = apply_plan(state, plan)
        stem = "state" if len(plans) == 1 else f"state_{i:03d}"
        run.state(stem, out)
        run.json(f"{stem}_plan.json", plan.to_records(m_bins))
        records.append({"file": f"{stem}.bin", "n_modes": out.n_modes, "angles": plan.angles.tolist(),
                        "purity_residual": out.purity_residual()})
    report = {"input_modes": state.n_modes, "outputs": records}
    if sweep is not None:
        report["sweep"] = {"index": sweep.get("index", 0), "values": sweep_values(sweep).tolist()}
    run.json("report.json", report)
    return report


def cmd_decompose(args, cfg: dict, seed: int, run: _Run) -> dict:
    if args.state is None:
        raise ConfigError("decompose needs --state")
    state = _read_state(args.state)
    try:
        circuit = effective_circuit(state)
    except DecompositionError as exc:
        raise NumericError(str(exc)) from None
    run.text("u_eff_amplitude.csv", matrix_to_csv(np.abs(circuit.u_eff)))
    run.text("u_eff_phase.csv", matrix_to_csv(np.angle(circuit.u_eff)))
    write_matrix_csv(run.path("r_eff.csv"), circuit.r_eff[None, :])
    run.json("circuit.json", circuit.to_dict())
    report = {"n_modes": circuit.n_modes, "r_eff": circuit.r_eff.tolist(),
              "purity_residual": circuit.purity_residual}
    check = args.roundtrip_check or cfg.get("decompose", {}).get("roundtrip_check", False)
    if check:
        err = float(np.max(np.abs(reconstruct(circuit).cov - state.cov)))
        report["roundtrip_error"] = err
        if err > 1e-8:
            raise NumericError(f"covariance roundtrip error {err:.3e} exceeds 1e-8")
    run.json("report.json", report)
    return report


def cmd_expressibility(args, cfg: dict, seed: int, run: _Run) -> dict:
    section = cfg.get("expressibility")
    if section is None:
        raise ConfigError("missing [expressibility] section")
    try:
        rows = expressibility_run(section, seed, workers=args.workers)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expressibility: {exc}") from None
    cols = ["n", "strategy", "r_in", "m_bins", "t", "value", "stderr", "haar_term", "param_term",
            "cross_term", "n_pairs", "n_rtest", "seed"]
    lines = [",".join(cols)] + [",".join(repr(float(r[c])) if isinstance(r[c], float) else str(r[c]) for c in cols)
                                for r in rows]
    run.text("deviations.csv", "\n".join(lines) + "\n")
    batch_lines = ["row,batch,value"]
    for i, r in enumerate(rows):
        batch_lines += [f"{i},{b},{float(v)!r}" for b, v in enumerate(r["batch_values"])]
    run.text("batch_means.csv", "\n".join(batch_lines) + "\n")
    report = {"rows": [{k: v for k, v in r.items() if k != "batch_values"} for r in rows]}
    run.json("report.json", report)
    return report


def cmd_haar_run(args, cfg: dict, seed: int, run: _Run) -> dict:
    if "cluster" not in cfg:
        raise ConfigError("missing [cluster] section")
    config = cluster_from_config(cfg["cluster"])
    h = dict(cfg.get("haar_run", {}))
    if args.strategy is not None:
        h["strategy"] = args.strategy
    try:
        report, circuit, amp, pha = haar_run(
            config, seed, strategy=h.get("strategy", "linear"), n_bins=h.get("n_bins", 60),
            trim_edges=h.get("trim_edges", 0), calibration_samples=h.get("calibration_samples", 8),
            workers=args.workers,
        )
    except DecompositionError as exc:
        raise NumericError(str(exc)) from None
    run.text("amplitude_histogram.csv", amp.to_csv())
    run.text("phase_histogram.csv", pha.to_csv())
    run.text("u_eff_amplitude.csv", matrix_to_csv(np.abs(circuit.u_eff)))
    run.text("u_eff_phase.csv", matrix_to_csv(np.angle(circuit.u_eff)))
    write_matrix_csv(run.path("r_eff.csv"), circuit.r_eff[None, :])
    run.json("report.json", report)
    return report


COMMANDS = {
    "build-cluster": cmd_build_cluster,
    "condition": cmd_condition,
    "decompose": cmd_decompose,
    "expressibility": cmd_expressibility,
    "haar-run": cmd_haar_run,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="measint", description="Measurement-induced interferometer simulations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--preset", help="named preset, merged under --config")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--out-dir", default=".", help="output directory")
        if name in ("condition", "decompose"):
            p.add_argument("--state", help="input covariance container (.bin)")
        if name == "condition":
            p.add_argument("--plan", help="measurement plan JSON")
        if name in ("condition", "haar-run"):
            p.add_argument("--strategy", choices=("linear", "knight"))
        if name == "decompose":
            p.add_argument("--roundtrip-check", action="store_true", help="verify covariance reconstruction")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load(args.config, args.preset)
        seed = _seed(args, cfg)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        run = _Run(out_dir)
        COMMANDS[args.command](args, cfg, seed, run)
        manifest = {
            "subcommand": args.command,
            "config_hash": config_hash(cfg),
            "seed": seed,
            "version": __version__,
            "wall_time": time.perf_counter() - start,
            "outputs": sorted(run.files),
        }
        write_json(out_dir / "manifest.json", manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, DecompositionError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed covariance files and similar bad inputs
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
