"""Implementations behind the ``netac`` subcommands.

Every output file starts with ``# netac <command> config=<json>`` so rerunning
with the embedded config reproduces it.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from . import oracle as O
from .checks import verify_instance
from .config import ExperimentConfig, substream, substream_seed
from .errors import ConfigError, NumericalError
from .generators import random_instance
from .model import load_model, save_model
from .policy import SoftmaxPolicy
from .sac import StepSchedule, Trainer, TrainerConfig, oracle_hook_for
from .wireless import WirelessConfig, WirelessEnv, aloha_sweep

log = logging.getLogger(__name__)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_csv(path: Path, cfg: ExperimentConfig, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# netac {cfg.command} config={cfg.header()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_json(path: Path, cfg: ExperimentConfig, doc: dict) -> None:
    doc = {"config": cfg.to_dict(), **doc}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True, default=float) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Inverse of write_csv, skipping the config comment line."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def make_instance(cfg: ExperimentConfig, seed: int):
    """(mdp, policy) from the model file or the generator's instance stream."""
    if cfg.model is not None:
        mdp, theta = load_model(cfg.model)
        policy = SoftmaxPolicy(theta) if theta is not None else SoftmaxPolicy.uniform(
            mdp.state_counts, mdp.action_counts)
        return mdp, policy
    if cfg.topology == "line":
        topology, n = "line", cfg.n
    else:
        topology, n = cfg.topology, None
    return random_instance(n, topology, cfg.states, cfg.actions,
                           seed=substream_seed(seed, "instance"), coupling=cfg.coupling)


def make_wireless(cfg: ExperimentConfig) -> WirelessEnv:
    wc = WirelessConfig(rows=cfg.grid[0], cols=cfg.grid[1], deadline=cfg.deadline,
                        arrival=cfg.arrival, success=cfg.success, seed=cfg.instance_seed)
    return WirelessEnv(wc, rng=substream(cfg.instance_seed, "instance"))


# -- decay ---------------------------------------------------------------------------

def cmd_decay(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    rows, summary = [], []
    finite = True
    for seed in cfg.seeds:
        mdp, policy = make_instance(cfg, seed)
        kmax = cfg.kappa_max if cfg.kappa_max is not None else mdp.n - 1
        prof = O.decay_profile(mdp, policy, cfg.agent, kmax, cfg.trials, substream(seed, "evaluation"))
        finite &= bool(np.all(np.isfinite(prof.values)))
        rho = O.interaction_matrix(mdp).rho_bound
        for k in range(kmax + 1):
            for t in range(cfg.trials):
                rows.append([seed, k, t, float(prof.values[k, t])])
        p10, p50, p90 = prof.percentiles()
        summary.append({
            "instance": seed, "rho_bound": rho, "fitted_rate": prof.fitted_rate(),
            "median_nonincreasing": bool(np.all(np.diff(p50) <= 0)),
            "p10": p10.tolist(), "p50": p50.tolist(), "p90": p90.tolist(),
        })
        log.info("instance %d: rho=%.3f rate=%.3f", seed, rho, summary[-1]["fitted_rate"])
    write_csv(out / "decay.csv", cfg, ["instance", "kappa", "trial", "value"], rows)
    rates = np.array([s["fitted_rate"] for s in summary])
    write_json(out / "decay_summary.json", cfg, {
        "instances": summary,
        "fraction_rate_below_one": float(np.mean(rates < 1.0)),
        "median_rate": float(np.median(rates)),
    })
    return 0 if finite else NumericalError.exit_code


# -- verify ---------------------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    reports = []
    for seed in cfg.seeds:
        mdp, policy = make_instance(cfg, seed)
        rep = verify_instance(mdp, policy, gamma=cfg.gamma, slack=cfg.slack)
        rep["instance"] = seed
        reports.append(rep)
    rows = []
    for rep in reports:
        for entry in rep["per_kappa"]:
            for name, c in entry["checks"].items():
                rows.append([rep["instance"], entry["kappa"], name, c["max_error"],
                             "" if c["bound"] is None else c["bound"],
                             "n/a" if c["pass"] is None else ("pass" if c["pass"] else "fail")])
    write_csv(out / "verify.csv", cfg, ["instance", "kappa", "check", "max_error", "bound", "verdict"], rows)
    write_json(out / "verify_report.json", cfg, {"reports": reports})
    ok = all(rep["all_pass"] is not False for rep in reports)
    return 0 if ok else NumericalError.exit_code


# -- train ----------------------------------------------------------------------------

def _trainer_config(cfg: ExperimentConfig, seed: int) -> TrainerConfig:
    eta0 = 0.0 if cfg.frozen_policy else cfg.eta0
    sched = StepSchedule(alpha0=cfg.alpha0, eta0=eta0, alpha_exp=cfg.alpha_exp, eta_exp=cfg.eta_exp)
    return TrainerConfig(kappa=cfg.kappa, horizon=cfg.horizon, schedule=sched, rescale=cfg.rescale,
                         seed=seed, cadence=cfg.cadence, oracle_every=cfg.oracle_every)


def train_one(cfg: ExperimentConfig, seed: int):
    """Run one seed; returns ``(env, policy, metrics, critic)``."""
    if cfg.env == "wireless":
        env, policy = make_wireless(cfg), None
        hook = None
        if cfg.oracle:
            raise ConfigError("the exact oracle does not apply to the wireless environment")
    else:
        env, policy = make_instance(cfg, cfg.instance_seed)
        if cfg.model is None:
            policy = SoftmaxPolicy.uniform(env.state_counts, env.action_counts)
        hook = oracle_hook_for(env) if cfg.oracle else None
    trainer = Trainer(env, _trainer_config(cfg, seed), policy)
    final, metrics = trainer.run(hook, rng=substream(seed, "trajectory"))
    return env, final, metrics, trainer.critic


def cmd_train(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    terminal = []
    for seed in cfg.seeds:
        env, policy, m, _ = train_one(cfg, seed)
        extra = {name: dict(vals) for name, vals in m.extra.items()}
        header = ["step", "mean_reward", "mean_mu_hat"] + sorted(extra)
        rows = []
        for k, step in enumerate(m.steps):
            rows.append([step, m.mean_reward[k], m.mean_mu_hat[k]]
                        + [extra[name].get(step, "") for name in sorted(extra)])
        write_csv(out / f"metrics_seed{seed}.csv", cfg, header, rows)
        policy_doc = {"config": cfg.to_dict(), "seed": seed, "kappa": cfg.kappa,
                      "theta": [t.tolist() for t in policy.theta]}
        if cfg.env == "mdp":
            save_model(out / f"policy_seed{seed}.json", env, policy)
        else:
            (out / f"policy_seed{seed}.json").write_text(json.dumps(policy_doc) + "\n")
        terminal.append(m.terminal_reward(min(cfg.window, cfg.horizon)))
    write_json(out / "train_summary.json", cfg, {
        "terminal_reward": terminal,
        "mean": float(np.mean(terminal)),
        "std": float(np.std(terminal)),
        "window": min(cfg.window, cfg.horizon),
    })
    return 0


# -- benchmark ------------------------------------------------------------------------

def cmd_benchmark(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg)
    env = make_wireless(cfg)
    sweep = aloha_sweep(env, cfg.p_values, cfg.eval_steps, cfg.episodes,
                        seed=substream_seed(cfg.seeds[0], "evaluation"))
    write_csv(out / "aloha.csv", cfg, ["p_send", "mean_reward"],
              [[p, r] for p, r in zip(sweep.p_values, sweep.rewards)])
    best_p, best_r = sweep.best
    write_json(out / "benchmark_summary.json", cfg, {"best_p_send": best_p, "best_reward": best_r})
    return 0


COMMAND_TABLE = {"decay": cmd_decay, "verify": cmd_verify, "train": cmd_train,
                 "benchmark": cmd_benchmark}
