"""Training, evaluation and table reproduction for the camping experiments.

Each restart ``i`` is seeded with ``seed + i``; the seed is split into
independent streams for the training environment, the agent's exploration and
the evaluation episodes. The same restart seeds are used for every agent and
condition. Aggregation always folds results in restart order, so worker
scheduling never changes the output.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import kernel
from .agents import ACAgent, EpisodeLog, QAgent, RewardModel, cause_label, run_greedy
from .camping import ACTION_NAMES, CAMP_NAMES, CampingEnv
from .config import ExperimentConfig
from .dsl import load_model

AGENTS = ("ac", "q")
AGENT_NAMES = {"ac": "AC Agent", "q": "Q Agent"}


@dataclass
class RunResult:
    condition: float
    agent: str
    restart: int
    seed: int
    logs: list
    eval_returns: list
    q_rows: list = field(default_factory=list)
    estimator_rows: list = field(default_factory=list)
    invariant_checks: int = 0


def sem(values) -> float:
    """Standard error of the mean: sample standard deviation over sqrt(n)."""
    values = np.asarray(list(values), dtype=float)
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def summarize(values) -> tuple[float, float, int]:
    values = list(values)
    if not values:
        return math.nan, math.nan, 0
    return float(np.mean(values)), sem(values), len(values)


def condition_label(p_A: float) -> str:
    return f"p_A={p_A:g}"


def make_agent(kind: str, cfg: ExperimentConfig, model, rng):
    n_actions = len(CampingEnv.actions)
    if kind == "q":
        return QAgent(n_actions, cfg.agent, rng)
    if kind == "ac":
        reward_model = RewardModel(cfg.outcome, ((0, 0.0), (1, cfg.environment.reward_fire)))
        return ACAgent(model, n_actions, cfg.agent, cfg.blame, reward_model, rng,
                       max_conjuncts=cfg.max_conjuncts, check_invariants=cfg.check_invariants)
    raise ValueError(f"unknown agent {kind!r}; expected one of {AGENTS}")


def run_restart(cfg: ExperimentConfig, kind: str, p_A: float, restart: int) -> RunResult:
    """Train one agent from scratch, then evaluate its policy."""
    seed = cfg.restart_seed(restart)
    env_seq, agent_seq, eval_seq = np.random.SeedSequence(seed).spawn(3)
    env_cfg = replace(cfg.environment, p_A=p_A)
    env = CampingEnv(env_cfg, np.random.default_rng(env_seq))
    model = load_model(cfg.model)
    agent = make_agent(kind, cfg, model, np.random.default_rng(agent_seq))
    logs = [agent.train_episode(env) for _ in range(cfg.episodes)]
    eval_env = CampingEnv(env_cfg, np.random.default_rng(eval_seq))
    eval_returns = run_greedy(agent, eval_env, cfg.eval_episodes, cfg.eval_epsilon,
                              np.random.default_rng(eval_seq.spawn(1)[0]))
    result = RunResult(p_A, kind, restart, seed, logs, eval_returns)
    result.q_rows = [(s, a, v) for s, row in agent.q.rows() for a, v in enumerate(row)]
    if isinstance(agent, ACAgent):
        result.estimator_rows = [
            (cause_label(c), s, a, p, m1, m2, n)
            for c, est in agent.registry.items()
            for s, a, p, m1, m2, n in est.rows()
        ]
        result.invariant_checks = agent.invariant_checks
    return result


def _run_job(args):
    _, kind, p_A, restart = args
    try:
        return run_restart(*args)
    except Exception as err:
        raise RuntimeError(f"restart {restart} ({kind}, {condition_label(p_A)}) failed: {err}") from err


def run_jobs(cfg: ExperimentConfig, jobs: list) -> list[RunResult]:
    """Run ``(kind, p_A, restart)`` jobs, returning results in job order."""
    args = [(cfg, kind, p_A, restart) for kind, p_A, restart in jobs]
    if cfg.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_job, args))
    return [_run_job(a) for a in args]


def restart_blames(logs: Iterable[EpisodeLog], window: int) -> dict:
    """Mean blame per cause over the last ``window`` episodes in which it was a cause."""
    logs = list(logs)[-window:]
    out: dict = {}
    for log in logs:
        for cause, b in log.blames.items():
            out.setdefault(cause, []).append(b)
    return {c: float(np.mean(v)) for c, v in out.items()}


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _manifest(cfg: ExperimentConfig, command: str, extra: Optional[dict] = None) -> dict:
    data = {
        "command": command,
        "config": cfg.to_dict(),
        "restart_seeds": [cfg.restart_seed(i) for i in range(cfg.restarts)],
        "seed_streams": "SeedSequence(restart_seed).spawn(3) -> training env, agent, evaluation",
        "kernel_backend": kernel.BACKEND,
    }
    data.update(extra or {})
    return data


def write_run(results: list[RunResult], cfg: ExperimentConfig, out: Path, command: str, extra=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "episodes.csv",
        ["condition", "agent", "restart", "episode", "raw_return", "modified_return", "length", "outcome", "blames"],
        [
            (condition_label(r.condition), r.agent, r.restart, log.episode, _fmt(log.raw_return),
             _fmt(log.modified_return), log.length, log.outcome,
             ";".join(f"{c}:{_fmt(b)}" for c, b in log.blames.items()))
            for r in results
            for log in r.logs
        ],
    )
    _write_csv(
        out / "qtable.csv",
        ["condition", "agent", "restart", "state", "action", "value"],
        [(condition_label(r.condition), r.agent, r.restart, s, a, _fmt(v)) for r in results for s, a, v in r.q_rows],
    )
    _write_csv(
        out / "estimators.csv",
        ["condition", "restart", "cause", "state", "action", "p", "m1", "m2", "sigma", "n"],
        [
            (condition_label(r.condition), r.restart, c, s, a, _fmt(p), _fmt(m1), _fmt(m2),
             _fmt(math.sqrt(max(m2 - m1 * m1, 0.0))), n)
            for r in results
            for c, s, a, p, m1, m2, n in r.estimator_rows
        ],
    )
    _write_csv(
        out / "eval.csv",
        ["condition", "agent", "restart", "mean_return", "sem", "episodes"],
        [(condition_label(r.condition), r.agent, r.restart, *_summary_fmt(r.eval_returns)) for r in results],
    )
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_manifest(cfg, command, extra), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary_fmt(values):
    m, s, n = summarize(values)
    return _fmt(m), _fmt(s), n


def train(cfg: ExperimentConfig, kind: str, out=None) -> list[RunResult]:
    """Train ``cfg.restarts`` agents on the configured ``p_A`` and write the run directory."""
    p_A = cfg.environment.p_A
    results = run_jobs(cfg, [(kind, p_A, i) for i in range(cfg.restarts)])
    write_run(results, cfg, Path(out or cfg.out), "train", {"agent": kind})
    return results


def tables(results: list[RunResult], cfg: ExperimentConfig) -> dict:
    """Table rows, trace rows and convergence rows from finished runs."""
    conditions = list(dict.fromkeys(r.condition for r in results))
    table1, table2, trace, convergence = [], [], [], []
    for p_A in conditions:
        label = condition_label(p_A)
        for kind in AGENTS:
            runs = [r for r in results if r.condition == p_A and r.agent == kind]
            if not runs:
                continue
            table1.append((label, kind, *summarize(np.mean(r.eval_returns) for r in runs)))
            returns = np.array([[log.raw_return for log in r.logs] for r in runs])
            for ep in range(returns.shape[1]):
                col = returns[:, ep]
                trace.append((label, kind, ep, float(col.mean()), sem(col), len(col)))
            last = returns[:, -cfg.trace_window:].mean(axis=1)
            convergence.append((label, kind, float(last.mean()), sem(last), len(last)))
            if kind == "ac":
                per_restart = [restart_blames(r.logs, cfg.blame_window) for r in runs]
                causes = sorted({c for d in per_restart for c in d}, key=_cause_order)
                for c in causes:
                    table2.append((label, c, *summarize(d[c] for d in per_restart if c in d)))
    return {"table1": table1, "table2": table2, "trace": trace, "convergence": convergence}


def _cause_order(label: str):
    # external causes first, then the agent's own
    return (0 if label.startswith("P") else 1, label)


def write_tables(t: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "table1.csv", ["condition", "agent", "mean", "sem", "n"],
               [(c, a, _fmt(m), _fmt(s), n) for c, a, m, s, n in t["table1"]])
    _write_csv(out / "table2.csv", ["condition", "cause", "mean", "sem", "n"],
               [(c, k, _fmt(m), _fmt(s), n) for c, k, m, s, n in t["table2"]])
    _write_csv(out / "trace.csv", ["condition", "agent", "episode", "mean", "sem", "n"],
               [(c, a, e, _fmt(m), _fmt(s), n) for c, a, e, m, s, n in t["trace"]])
    _write_csv(out / "convergence.csv", ["condition", "agent", "last_window_mean", "sem", "n"],
               [(c, a, _fmt(m), _fmt(s), n) for c, a, m, s, n in t["convergence"]])


def reproduce(cfg: ExperimentConfig, out=None, plot: bool = False, keep_runs: bool = False) -> dict:
    """Both agents under every condition; writes table1/table2/trace CSVs."""
    out = Path(out or cfg.out)
    jobs = [(kind, p_A, i) for p_A in cfg.conditions for kind in AGENTS for i in range(cfg.restarts)]
    results = run_jobs(cfg, jobs)
    t = tables(results, cfg)
    write_tables(t, out)
    checks = sum(r.invariant_checks for r in results)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_manifest(cfg, "reproduce", {"invariant_checks": checks}), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if keep_runs:
        write_run(results, cfg, out / "runs", "reproduce")
    if plot:
        plot_trace(out / "trace.csv", out / "trace.svg")
    t["results"] = results
    t["invariant_checks"] = checks
    return t


def plot_trace(trace_csv, svg_path) -> None:
    """Line plot of the per-episode mean return with a +-SEM band, from trace.csv alone."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict = {}
    with open(trace_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["condition"], row["agent"])
            series.setdefault(key, []).append((int(row["episode"]), float(row["mean"]), float(row["sem"])))
    conditions = list(dict.fromkeys(c for c, _ in series))
    fig, axes = plt.subplots(1, len(conditions), figsize=(5 * len(conditions), 3.5), squeeze=False)
    for ax, cond in zip(axes[0], conditions):
        for (c, agent), pts in series.items():
            if c != cond:
                continue
            ep, m, s = (np.array(x) for x in zip(*pts))
            ax.plot(ep, m, lw=0.8, label=AGENT_NAMES.get(agent, agent))
            ax.fill_between(ep, m - s, m + s, alpha=0.3)
        ax.set_title(cond)
        ax.set_xlabel("episode")
        ax.set_ylabel("return")
        ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)


# run-directory readers ------------------------------------------------------

class MissingArtifact(FileNotFoundError):
    pass


def _read_csv(path: Path) -> list[dict]:
    if not path.is_file():
        raise MissingArtifact(f"missing run artifact: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_run(run_dir) -> dict:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise MissingArtifact(f"missing run artifact: {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    return {
        "manifest": manifest,
        "qtable": _read_csv(run_dir / "qtable.csv"),
        "estimators": _read_csv(run_dir / "estimators.csv"),
    }


def q_tables(run: dict) -> dict:
    """(condition, agent, restart) -> {state: [values]}."""
    out: dict = {}
    for row in run["qtable"]:
        key = (row["condition"], row["agent"], int(row["restart"]))
        table = out.setdefault(key, {})
        vals = table.setdefault(int(row["state"]), [0.0] * len(ACTION_NAMES))
        vals[int(row["action"])] = float(row["value"])
    return out


def greedy_action(values: list) -> int:
    return values.index(max(values))


def evaluate_run(run_dir, episodes: Optional[int] = None, epsilon: float = 0.0, seed: Optional[int] = None) -> list:
    """Re-evaluate every saved Q-table; returns (condition, agent, restart, mean, sem, n) rows."""
    from .camping import CampConfig

    run = load_run(run_dir)
    cfgd = run["manifest"]["config"]
    episodes = cfgd["eval_episodes"] if episodes is None else episodes
    base_seed = cfgd["seed"] if seed is None else seed
    rows = []
    for (cond, kind, restart), table in sorted(q_tables(run).items()):
        env_cfg = CampConfig(**{**cfgd["environment"], "p_A": float(cond.split("=")[1])})
        agent = QAgent(len(ACTION_NAMES))
        agent.q.values = {s: list(v) for s, v in table.items()}
        seq = np.random.SeedSequence([base_seed + restart, 1])
        env = CampingEnv(env_cfg, np.random.default_rng(seq))
        returns = run_greedy(agent, env, episodes, epsilon, np.random.default_rng(seq.spawn(1)[0]))
        rows.append((cond, kind, restart, *summarize(returns)))
    return rows


def inspect_run(run_dir, restart: int = 0) -> str:
    """Readable summary of estimators and greedy policies in a run directory."""
    run = load_run(run_dir)
    lines = []
    tables_ = q_tables(run)
    keys = sorted(tables_)
    starts: dict = {}
    for cond, kind, r in keys:
        a = greedy_action(tables_[(cond, kind, r)].get(0, [0.0] * len(ACTION_NAMES)))
        starts.setdefault((cond, kind), []).append(a)
    lines.append("greedy action at the start state, across restarts:")
    for (cond, kind), acts in starts.items():
        counts = ", ".join(f"{ACTION_NAMES[a]}={acts.count(a)}" for a in sorted(set(acts)))
        lines.append(f"  {cond} {kind}: {counts}")
    for cond, kind, r in keys:
        if r != restart:
            continue
        lines.append(f"greedy policy ({cond}, {kind}, restart {r}):")
        for s, vals in sorted(tables_[(cond, kind, r)].items()):
            qs = " ".join(f"{v:9.3f}" for v in vals)
            lines.append(f"  {CAMP_NAMES[s]:>6}: {ACTION_NAMES[greedy_action(vals)]:<11} Q=[{qs}]")
    est_rows = [row for row in run["estimators"] if int(row["restart"]) == restart]
    if est_rows:
        lines.append(f"time-to-event estimators (restart {restart}):")
        lines.append(f"  {'condition':<9} {'cause':<6} {'state':>6} {'action':<11} {'p':>7} {'m1':>9} {'sigma':>9} {'n':>6}")
        for row in est_rows:
            lines.append(
                f"  {row['condition']:<9} {row['cause']:<6} {CAMP_NAMES[int(row['state'])]:>6} "
                f"{ACTION_NAMES[int(row['action'])]:<11} {float(row['p']):7.3f} {float(row['m1']):9.3f} "
                f"{float(row['sigma']):9.3f} {int(row['n']):6d}"
            )
    return "\n".join(lines)
