"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 GA budget exhausted.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SFQError
from .experiments import (
    jitter_csv,
    jitter_scan,
    optimize_gate_time,
    pixel_count,
    speed_limit_sweep,
)
from .ga import GAConfig
from .model import DEFAULT_SUBSTEPS, ModelParams, UnitaryDatabase, build_database, dumps_database
from .sequence import (
    PulseSequence,
    evolve,
    fidelity,
    pauli_y,
    populations,
    truncated_initial_sequence,
)

log = logging.getLogger("sfqcontrol")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3

# [model] keys in CLI units -> (ModelParams field, factor to SI)
MODEL_KEYS = {
    "omega_ghz": ("omega", 2 * math.pi * 1e9),
    "delta_ghz": ("delta", 2 * math.pi * 1e9),
    "dtheta": ("dtheta", 1.0),
    "t_c_ps": ("t_c", 1e-12),
    "tau_ps": ("tau", 1e-12),
    "levels": ("levels", None),
}
# SI spellings, written to run.meta so a rerun sees bit-identical floats
MODEL_SI_KEYS = {
    "omega_rad_s": "omega",
    "delta_rad_s": "delta",
    "t_c_s": "t_c",
    "tau_s": "tau",
}
GA_KEYS = {f.name: f.type for f in fields(GAConfig)}
RUN_KEYS = ("gate_ns", "target", "leak_phase", "substeps")


class ConfigError(SFQError):
    pass


@dataclass
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    ga: GAConfig = field(default_factory=GAConfig)
    target: str = "pauli_y"
    leak_phase: float = 0.0
    gate_ns: float = 20.0
    substeps: int = DEFAULT_SUBSTEPS

    @property
    def gate_time(self) -> float:
        return self.gate_ns * 1e-9

    def target_gate(self):
        return pauli_y(self.model.levels, self.leak_phase)

    def dumps(self) -> str:
        """Canonical config text; parsing it back gives an equal RunConfig."""
        p = self.model
        lines = [
            "[model]",
            f"# omega/2pi = {p.omega / (2 * math.pi * 1e9):.12g} GHz, "
            f"delta/2pi = {p.delta / (2 * math.pi * 1e9):.12g} GHz, "
            f"t_c = {p.t_c * 1e12:.12g} ps, tau = {p.tau * 1e12:.12g} ps",
        ]
        for key, name in MODEL_SI_KEYS.items():
            lines.append(f"{key} = {getattr(p, name)!r}")
        lines.append(f"dtheta = {p.dtheta!r}")
        lines.append(f"levels = {p.levels}")
        lines.append("")
        lines.append("[ga]")
        for key, value in self.ga.to_dict().items():
            lines.append(f"{key} = {value}")
        lines.append("")
        lines.append("[run]")
        lines.append(f"gate_ns = {self.gate_ns!r}")
        lines.append(f"target = {self.target}")
        lines.append(f"leak_phase = {self.leak_phase!r}")
        lines.append(f"substeps = {self.substeps}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _convert(raw: str, kind):
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float"):
        return float(raw)
    return raw.strip()


def parse_config(text: str = "") -> RunConfig:
    """Parse ``[model]``/``[ga]``/``[run]`` key = value text; every key is optional.

    ``[model]`` takes frequencies in GHz (``omega_ghz``, ``delta_ghz``) and
    times in ps (``t_c_ps``, ``tau_ps``), or the SI spellings written by
    ``RunConfig.dumps``. Other sections are ignored.
    """
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    model_kw = {}
    ga_kw = {}
    run_kw = {}
    try:
        if cp.has_section("model"):
            for key, raw in cp.items("model"):
                if key in MODEL_SI_KEYS:
                    name, value = MODEL_SI_KEYS[key], float(raw)
                elif key in MODEL_KEYS:
                    name, factor = MODEL_KEYS[key]
                    value = int(raw) if factor is None else float(raw) * factor
                else:
                    raise ConfigError(f"unknown [model] key {key!r}")
                if name in model_kw:
                    raise ConfigError(f"[model] sets {name} twice")
                model_kw[name] = value
        if cp.has_section("ga"):
            for key, raw in cp.items("ga"):
                if key not in GA_KEYS:
                    raise ConfigError(f"unknown [ga] key {key!r}")
                default = getattr(GAConfig(), key)
                ga_kw[key] = _convert(raw, type(default).__name__)
        if cp.has_section("run"):
            for key, raw in cp.items("run"):
                if key not in RUN_KEYS:
                    raise ConfigError(f"unknown [run] key {key!r}")
                run_kw[key] = _convert(raw, {"gate_ns": float, "leak_phase": float,
                                             "substeps": int}.get(key, str))
    except ValueError as exc:
        if isinstance(exc, SFQError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    if "t_c" in model_kw and "tau" not in model_kw:
        model_kw["tau"] = model_kw["t_c"] / 3
    cfg = RunConfig(model=ModelParams(**model_kw), ga=GAConfig(**ga_kw), **run_kw)
    if cfg.target != "pauli_y":
        raise ConfigError(f"unknown target {cfg.target!r}; only 'pauli_y' is available")
    if cfg.substeps < 1:
        raise ConfigError("substeps must be >= 1")
    return cfg


# -- helpers -------------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _load_or_build_db(cfg: RunConfig, db_path: str | None) -> UnitaryDatabase:
    if db_path and Path(db_path).exists():
        db = UnitaryDatabase.load(db_path)
        if db.params != cfg.model:
            raise ConfigError(f"database {db_path} was built for different model parameters")
        return db
    db = build_database(cfg.model, cfg.substeps)
    if db_path:
        _write(Path(db_path), _db_text(db))
    return db


def _db_text(db: UnitaryDatabase) -> str:
    return dumps_database(db)


def _meta(cfg: RunConfig, command: str, wall: float, extra: dict | None = None) -> str:
    lines = [
        "[meta]",
        f"version = sfqcontrol {__version__}",
        f"command = {command}",
        f"config_hash = {cfg.digest()}",
        f"seed = {cfg.ga.seed}",
        f"wall_time_s = {wall:.3f}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n\n" + cfg.dumps()


def _population_csv(seq: PulseSequence, pops: np.ndarray) -> str:
    d = pops.shape[1]
    buf = io.StringIO()
    buf.write("pixel,time_ns," + ",".join(f"p{k}" for k in range(d)) + "\n")
    for i, row in enumerate(pops):
        buf.write(f"{i},{i * seq.pixel * 1e9:.12g}," + ",".join(f"{x:.17g}" for x in row) + "\n")
    return buf.getvalue()


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


# -- commands ------------------------------------------------------------------

def cmd_gen_db(cfg: RunConfig, args) -> int:
    path = Path(args.db or Path(args.out) / "db.txt")
    db = build_database(cfg.model, cfg.substeps)
    _write(path, _db_text(db))
    print(f"wrote {path} (dim {db.dim}, substeps {db.substeps})")
    return EXIT_OK


def cmd_init_seq(cfg: RunConfig, args) -> int:
    n = pixel_count(cfg.gate_time, cfg.model.pixel)
    seq = truncated_initial_sequence(cfg.model, n)
    path = Path(args.seq or Path(args.out) / "init.seq")
    _write(path, seq.dumps())
    print(f"wrote {path} ({seq.n_pixels} pixels, {seq.n_pulses} pulses)")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    if not args.seq:
        raise ConfigError("simulate needs --seq")
    seq = PulseSequence.load(args.seq)
    db = _load_or_build_db(cfg, args.db)
    if not math.isclose(seq.pixel, db.params.pixel, rel_tol=1e-9):
        raise ConfigError(
            f"sequence pixel {seq.pixel * 1e12:g} ps differs from model pixel "
            f"{db.params.pixel * 1e12:g} ps"
        )
    seq = PulseSequence(seq.bits, db.params.pixel)
    target = pauli_y(db.dim, cfg.leak_phase)
    fid = fidelity(evolve(seq, db), target)
    err = 1.0 - fid
    out = Path(args.out)
    _write(out / "fidelity.csv",
           "pixels,pulses,gate_ns,fidelity,error\n"
           f"{seq.n_pixels},{seq.n_pulses},{seq.gate_time * 1e9:.12g},{fid:.17g},{err:.17g}\n")
    _write(out / "populations_ground.csv", _population_csv(seq, populations(seq, db, 0)))
    _write(out / "populations_excited.csv", _population_csv(seq, populations(seq, db, 1)))
    print(f"gate error {err:.6g}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    db = _load_or_build_db(cfg, args.db)
    t0 = time.perf_counter()
    best, run = optimize_gate_time(cfg.gate_time, db, cfg.ga, cfg.target_gate(), args.threads)
    wall = time.perf_counter() - t0
    out = Path(args.out)
    buf = io.StringIO()
    buf.write("generation,best_error,mean_error\n")
    for gen, bestf, meanf in run.history:
        buf.write(f"{gen},{1 - bestf:.17g},{1 - meanf:.17g}\n")
    _write(out / "history.csv", buf.getvalue())
    _write(out / "best.seq", best.dumps())
    _write(out / "run.meta", _meta(cfg, "optimize", wall, {
        "terminated_by": run.terminated_by,
        "generations": run.generations_used,
        "best_error": f"{1 - run.best_fitness:.17g}",
        "pulses": best.n_pulses,
    }))
    print(f"{run.terminated_by}: gate error {1 - run.best_fitness:.6g} after "
          f"{run.generations_used} generations, {best.n_pulses} pulses")
    return EXIT_OK if run.terminated_by == "target_reached" else EXIT_BUDGET


def cmd_sweep(cfg: RunConfig, args) -> int:
    gate_ns = _float_list(args.gate_times)
    if not gate_ns:
        raise ConfigError("--gate-times is empty")
    times = [g * 1e-9 for g in gate_ns]
    for t in times:
        pixel_count(t, cfg.model.pixel)
    db = _load_or_build_db(cfg, args.db)
    t0 = time.perf_counter()
    result = speed_limit_sweep(times, db, cfg.ga, cfg.target_gate(), args.threads)
    out = Path(args.out)
    _write(out / "qsl.csv", result.to_csv())
    for row in result.rows:
        _write(out / f"best_{row.gate_time * 1e9:g}ns.seq", row.best.dumps())
    _write(out / "run.meta", _meta(cfg, "sweep-qsl", time.perf_counter() - t0,
                                   {"gate_times_ns": ",".join(f"{g:g}" for g in gate_ns)}))
    for row in result.rows:
        print(f"{row.gate_time * 1e9:g} ns: error {row.best_error:.6g} ({row.terminated_by})")
    return EXIT_OK


def cmd_jitter(cfg: RunConfig, args) -> int:
    if not args.seq:
        raise ConfigError("jitter needs --seq")
    seq = PulseSequence.load(args.seq)
    db = _load_or_build_db(cfg, args.db)
    seq = PulseSequence(seq.bits, db.params.pixel)
    sigmas = [s * 1e-12 for s in _float_list(args.sigmas)]
    if not sigmas or any(s < 0 for s in sigmas):
        raise ConfigError("--sigmas needs non-negative values in ps")
    modes = ("external", "internal") if args.mode == "both" else (args.mode,)
    t0 = time.perf_counter()
    rows = jitter_scan(seq, db, sigmas, modes, args.runs, cfg.ga.seed, args.internal_model,
                       pauli_y(db.dim, cfg.leak_phase), args.threads)
    out = Path(args.out)
    _write(out / "jitter.csv", jitter_csv(rows))
    _write(out / "run.meta", _meta(cfg, "jitter", time.perf_counter() - t0, {
        "sigmas_ps": args.sigmas, "mode": args.mode, "runs": args.runs,
        "internal_model": args.internal_model, "sequence": args.seq,
    }))
    for sigma, mode, res in rows:
        print(f"{mode} sigma={sigma * 1e12:g} ps: mean error {res.mean_error:.6g} "
              f"(std {res.std_error:.3g})")
    return EXIT_OK


COMMANDS = {
    "gen-db": cmd_gen_db,
    "init-seq": cmd_init_seq,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep-qsl": cmd_sweep,
    "jitter": cmd_jitter,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file with [model]/[ga]/[run]")
    common.add_argument("--db", help="unitary database file (read if present, else written)")
    common.add_argument("--seq", help="pulse sequence file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="RNG seed (overrides [ga] seed)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--gate-ns", type=float, help="gate time in ns (overrides [run])")
    common.add_argument("--levels", type=int, help="transmon levels (overrides [model])")
    common.add_argument("--max-iterations", type=int, help="GA generation budget")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sfqcontrol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sfqcontrol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen-db", "init-seq", "simulate", "optimize"):
        sub.add_parser(name, parents=[common])
    sweep = sub.add_parser("sweep-qsl", parents=[common])
    sweep.add_argument("--gate-times", default="6,8,12,16,20", help="comma list in ns")
    jit = sub.add_parser("jitter", parents=[common])
    jit.add_argument("--sigmas", default="0,0.1,1,10", help="comma list in ps")
    jit.add_argument("--mode", choices=["external", "internal", "both"], default="both")
    jit.add_argument("--runs", type=int, default=1000)
    jit.add_argument("--internal-model", choices=["independent_sqrt_k", "random_walk"],
                     default="independent_sqrt_k")
    return parser


def load_config(args) -> RunConfig:
    text = ""
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        text = path.read_text()
    cfg = parse_config(text)
    ga_over = {}
    if args.seed is not None:
        ga_over["seed"] = args.seed
    if args.max_iterations is not None:
        ga_over["max_iterations"] = args.max_iterations
    if ga_over:
        cfg = replace(cfg, ga=replace(cfg.ga, **ga_over))
    if args.levels is not None:
        cfg = replace(cfg, model=replace(cfg.model, levels=args.levels))
    if args.gate_ns is not None:
        cfg = replace(cfg, gate_ns=args.gate_ns)
    if args.seq and not Path(args.seq).exists() and args.command in ("simulate", "jitter"):
        raise ConfigError(f"sequence file {args.seq} does not exist")
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if getattr(args, "runs", 1) < 1:
        raise ConfigError("--runs must be >= 1")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except SFQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
