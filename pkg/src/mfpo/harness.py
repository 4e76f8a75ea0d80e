"""Experiment configuration, CSV metrics and run comparison.

Configuration files are flat ``key = value`` text, one entry per line, with
``#`` starting a comment. Recognised keys and defaults::

    algorithm      = mfpo          # mfpo | fedpg
    env            = cartpole      # cartpole | pendulum | chain
    horizon        =               # optional override of the env horizon
    hidden_units   = 16
    N = 5 ; K = 10 ; D = 10 ; T = 2000
    D_tilde        =               # defaults to D * K
    schedule       = practical     # practical | theory
    alpha0 = 0.0001 ; decay = 0.99 ; momentum_coeff = 3.0
    momentum       =               # optional fixed nu for every step
    sigma_g = 1.0 ; L_tilde = 1.0  # theory schedule estimates
    estimator      = gpomdp        # gpomdp | reinforce
    baseline       = running_mean  # running_mean | zero
    baseline_decay = 0.9
    gamma          = 0.99
    weight_clip    =               # optional
    seed           = 0
    eval_episodes  = 20
    stop_return    =               # optional early stop threshold
    output         = metrics.csv
    sweep_N = 1,2,5 ; sweep_K = ... ; sweep_D = ... ; sweep_seed = ...

(``;`` above only abbreviates this listing; the file takes one key per line.)
Sweeps run the Cartesian product of the listed values and write one CSV
per combination, suffixed like ``metrics_N2_seed1.csv``.
"""

import csv
import dataclasses
import io
import itertools
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Dict, List, Optional, Sequence

from .algorithm import HyperParams, TrainingResult, run_training
from .baselines import FedPgParams, fedpg_run_training
from .envs import ENVIRONMENTS, Continuous, make_env
from .errors import NonFiniteOutput, ParseError
from .estimators import EstimatorConfig
from .metrics import CSV_COLUMNS, MetricsRecord
from .policy import Categorical, PolicyArch, TanhGaussian
from .schedules import PracticalSchedule, TheorySchedule


def _opt(conv):
    def parse(text):
        return None if text == "" else conv(text)

    return parse


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _choice(*names):
    def parse(text):
        if text not in names:
            raise ValueError(f"expected one of {', '.join(names)}")
        return text

    return parse


SCHEMA = {
    "algorithm": (_choice("mfpo", "fedpg"), "mfpo"),
    "env": (_choice(*ENVIRONMENTS), "cartpole"),
    "horizon": (_opt(int), None),
    "hidden_units": (int, 16),
    "N": (int, 5),
    "K": (int, 10),
    "D": (int, 10),
    "T": (int, 2000),
    "D_tilde": (_opt(int), None),
    "schedule": (_choice("practical", "theory"), "practical"),
    "alpha0": (float, 1e-4),
    "decay": (float, 0.99),
    "momentum_coeff": (float, 3.0),
    "momentum": (_opt(float), None),
    "sigma_g": (float, 1.0),
    "L_tilde": (float, 1.0),
    "estimator": (_choice("gpomdp", "reinforce"), "gpomdp"),
    "baseline": (_choice("running_mean", "zero"), "running_mean"),
    "baseline_decay": (float, 0.9),
    "gamma": (float, 0.99),
    "weight_clip": (_opt(float), None),
    "seed": (int, 0),
    "eval_episodes": (int, 20),
    "stop_return": (_opt(float), None),
    "output": (str, "metrics.csv"),
    "sweep_N": (_int_list, ()),
    "sweep_K": (_int_list, ()),
    "sweep_D": (_int_list, ()),
    "sweep_seed": (_int_list, ()),
}


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "mfpo"
    env: str = "cartpole"
    horizon: Optional[int] = None
    hidden_units: int = 16
    N: int = 5
    K: int = 10
    D: int = 10
    T: int = 2000
    D_tilde: Optional[int] = None
    schedule: str = "practical"
    alpha0: float = 1e-4
    decay: float = 0.99
    momentum_coeff: float = 3.0
    momentum: Optional[float] = None
    sigma_g: float = 1.0
    L_tilde: float = 1.0
    estimator: str = "gpomdp"
    baseline: str = "running_mean"
    baseline_decay: float = 0.9
    gamma: float = 0.99
    weight_clip: Optional[float] = None
    seed: int = 0
    eval_episodes: int = 20
    stop_return: Optional[float] = None
    output: str = "metrics.csv"
    sweep_N: tuple = ()
    sweep_K: tuple = ()
    sweep_D: tuple = ()
    sweep_seed: tuple = ()

    def __post_init__(self):
        # building everything once surfaces invalid combinations at parse time
        self.build_env()
        self.build_params()
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def build_env(self):
        kwargs = {} if self.horizon is None else {"horizon": self.horizon}
        if self.env == "chain" and self.horizon is not None:
            raise ValueError("the chain environment's horizon is fixed by its MDP")
        return make_env(self.env, **kwargs)

    def build_arch(self, env=None) -> PolicyArch:
        env = self.build_env() if env is None else env
        space = env.spec.action_space
        head = TanhGaussian(space.dim) if isinstance(space, Continuous) else Categorical(space.n)
        return PolicyArch(env.spec.state_dim, self.hidden_units, head)

    def build_estimator(self) -> EstimatorConfig:
        return EstimatorConfig(self.estimator, self.baseline, self.baseline_decay, self.gamma, self.weight_clip)

    def build_params(self):
        if self.algorithm == "fedpg":
            if self.schedule != "practical":
                raise ValueError("fedpg supports only the practical schedule")
            sched = PracticalSchedule(self.alpha0, self.decay, self.momentum_coeff, self.momentum)
            return FedPgParams(self.N, self.K, self.D, self.T, sched, self.build_estimator(), self.eval_episodes)
        if self.schedule == "theory":
            sched = TheorySchedule(self.K, self.D, self.N, self.sigma_g, self.L_tilde)
        else:
            sched = PracticalSchedule(self.alpha0, self.decay, self.momentum_coeff, self.momentum)
        return HyperParams(
            self.N, self.K, self.D, self.T, sched, self.build_estimator(), self.D_tilde, self.eval_episodes
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def expand_sweep(self):
        """``(suffix, config)`` pairs, one per sweep combination (just ``("", self)`` without sweeps)."""
        axes = [(name[6:], getattr(self, name)) for name in ("sweep_N", "sweep_K", "sweep_D", "sweep_seed")]
        axes = [(k, vals) for k, vals in axes if vals]
        if not axes:
            return [("", self)]
        out = []
        for combo in itertools.product(*(vals for _, vals in axes)):
            changes = dict(zip((k for k, _ in axes), combo))
            suffix = "_" + "_".join(f"{k}{v}" for k, v in changes.items())
            cfg = dataclasses.replace(self, sweep_N=(), sweep_K=(), sweep_D=(), sweep_seed=(), **changes)
            out.append((suffix, cfg))
        return out


_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _LINE.match(line)
        if m is None:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = m.groups()
        if key not in SCHEMA:
            raise ParseError("unknown key", line=lineno, key=key)
        if key in values:
            raise ParseError(f"duplicate key (first set on line {lines[key]})", line=lineno, key=key)
        conv, _ = SCHEMA[key]
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ParseError(f"invalid value {value!r}: {exc}", line=lineno, key=key) from None
        lines[key] = lineno
    try:
        return RunConfig(**values)
    except (ValueError, TypeError) as exc:
        key = next((k for k in values if re.search(rf"\b{re.escape(k)}\b", str(exc))), None)
        raise ParseError(str(exc), line=lines.get(key), key=key) from None


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(records: Sequence[MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(v) for v in r.as_row()])
    return buf.getvalue()


def write_csv(path, records: Sequence[MetricsRecord]):
    Path(path).write_bytes(format_csv(records).encode("utf-8"))


def read_csv(path) -> List[MetricsRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(
                MetricsRecord(
                    round=int(row["round"]),
                    step=int(row["step"]),
                    env_interactions=int(row["env_interactions"]),
                    comm_rounds=int(row["comm_rounds"]),
                    eval_return_mean=float(row["eval_return_mean"]),
                    eval_return_std=float(row["eval_return_std"]),
                    grad_norm_sq=float(row["grad_norm_sq"]) if row["grad_norm_sq"] else None,
                    wall_ms=int(row["wall_ms"]),
                )
            )
    return out


def suffixed(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix + p.suffix)


def execute(config: RunConfig, metrics_sink=None) -> TrainingResult:
    """Train once with ``config`` (sweeps are ignored) and return the result."""
    env = config.build_env()
    arch = config.build_arch(env)
    params = config.build_params()
    train = fedpg_run_training if config.algorithm == "fedpg" else run_training
    return train(params, arch, env, config.seed, metrics_sink, stop_return=config.stop_return)


def run(config: RunConfig, out=None, stdout=None) -> int:
    """Run every sweep combination, write one CSV each and print a summary line per run.

    Returns a process exit status: 0 on success, 1 if training diverged.
    """
    stdout = sys.stdout if stdout is None else stdout
    base = config.output if out is None else out
    for suffix, cfg in config.expand_sweep():
        path = suffixed(base, suffix)
        try:
            result = execute(cfg)
        except NonFiniteOutput as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return 1
        write_csv(path, result.metrics)
        last = result.metrics[-1]
        print(
            f"{path}: algorithm={cfg.algorithm} env={cfg.env} rounds={last.comm_rounds} "
            f"interactions={last.env_interactions} final_return={last.eval_return_mean:.2f}",
            file=stdout,
        )
    return 0


@dataclass
class RunSummary:
    path: str
    group: str
    reached: bool
    rounds_to_threshold: Optional[int]
    interactions_to_threshold: Optional[int]
    final_return: float


@dataclass
class Report:
    threshold: float
    runs: List[RunSummary]
    groups: Dict[str, dict] = field(default_factory=dict)

    def format(self) -> str:
        lines = [f"threshold = {self.threshold}"]
        lines.append(f"{'run':40s} {'reached':>7s} {'rounds':>7s} {'interactions':>13s} {'final':>9s}")
        for r in self.runs:
            lines.append(
                f"{r.path:40s} {str(r.reached):>7s} {_fmt(r.rounds_to_threshold) or '-':>7s} "
                f"{_fmt(r.interactions_to_threshold) or '-':>13s} {r.final_return:9.2f}"
            )
        lines.append("")
        lines.append(f"{'group':30s} {'reached':>9s} {'med rounds':>11s} {'med interactions':>17s} {'speedup':>8s}")
        for name, g in self.groups.items():
            med_r = "-" if g["median_rounds"] is None else f"{g['median_rounds']:g}"
            med_i = "-" if g["median_interactions"] is None else f"{g['median_interactions']:g}"
            sp = "-" if g["speedup"] is None else f"{g['speedup']:.3f}"
            lines.append(f"{name:30s} {g['reached']:>4d}/{g['runs']:<4d} {med_r:>11s} {med_i:>17s} {sp:>8s}")
        return "\n".join(lines)


def _group_name(path) -> str:
    return re.sub(r"_seed\d+$", "", Path(path).stem)


def threshold_crossing(records: Sequence[MetricsRecord], threshold: float):
    """First record whose evaluation return reaches ``threshold``, or None."""
    return next((r for r in records if r.eval_return_mean >= threshold), None)


def compare_report(csv_paths: Sequence, threshold_return: float, runs=None) -> Report:
    """Rounds and interactions to reach a return threshold, with per-group medians.

    Runs are grouped by file name with any ``_seed<k>`` suffix removed.
    Runs that never reach the threshold are flagged and left out of the
    medians. ``speedup`` is the first group's median interactions divided
    by each group's. ``runs`` may supply already-loaded records per path.
    """
    if len(csv_paths) < 2:
        raise ValueError("compare_report needs at least two metric files")
    summaries = []
    for path in csv_paths:
        records = runs[path] if runs is not None else read_csv(path)
        hit = threshold_crossing(records, threshold_return)
        summaries.append(
            RunSummary(
                path=str(path),
                group=_group_name(path),
                reached=hit is not None,
                rounds_to_threshold=None if hit is None else hit.round,
                interactions_to_threshold=None if hit is None else hit.env_interactions,
                final_return=records[-1].eval_return_mean if records else math.nan,
            )
        )
    groups = {}
    for s in summaries:
        groups.setdefault(s.group, []).append(s)
    out = {}
    ref = None
    for name, members in groups.items():
        ok = [m for m in members if m.reached]
        med_r = median(m.rounds_to_threshold for m in ok) if ok else None
        med_i = median(m.interactions_to_threshold for m in ok) if ok else None
        if ref is None:
            ref = med_i
        out[name] = {
            "runs": len(members),
            "reached": len(ok),
            "median_rounds": med_r,
            "median_interactions": med_i,
            "speedup": (ref / med_i) if (ref is not None and med_i) else None,
        }
    return Report(threshold_return, summaries, out)
