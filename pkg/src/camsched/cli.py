"""Command-line driver: ``camsched <subcommand> [options]``.

Subcommands: generate, split, train, eval, baseline, report. Every subcommand
accepts ``--config`` (TOML), ``--seed``, ``--out`` and ``--verbose``; flags
override the config file.

Seeding: the single top-level seed (``--seed`` or ``seed = ...`` at the top
of the config, default 0) is split per component as
``SeedSequence([seed, crc32(name)]).generate_state(1, uint64)[0]`` for
``name`` in ``synth``, ``split``, ``train``, ``eval``. Sections may not carry
their own seed.

Exit codes: 0 success, 1 configuration or contract error, 2 I/O error.

Config layout::

    seed = 7
    [synth]     # SynthConfig fields
    [env]       # err_rate, time_limit, history_len, reward_horizon, use_time_limit
    [train]     # gamma, n_step, lr, batch_size, capacity, epochs, eps_floor, hidden, ...
    [split]     # fraction
    [eval]      # err_rates (percent), mode, targets
    [baseline]  # which
    [paths]     # data, network, train, test, model
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import agent as A
from . import baselines as B
from . import metrics as M
from .env import ContractError, EnvConfig, write_poll_log
from .mlp import ShapeError
from .netmodel import (CameraNetwork, SynthConfig, TrajectorySet, generate_synthetic, infer_links,
                       load_network, load_trajectories, save_network, save_trajectories,
                       split_train_test)

log = logging.getLogger("camsched")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2
DEFAULT_ERR_RATES = (0, 5, 10, 15, 20)
METHODS = ("exhaustive", "neighbor", "gaussian")
SECTIONS = ("synth", "env", "train", "split", "eval", "baseline", "paths")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def component_seed(seed: int, name: str) -> int:
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1, np.uint64)[0])


# ------------------------------------------------------------------- config

def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(cfg) - set(SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in SECTIONS:
        if "seed" in cfg.get(name, {}):
            raise ConfigError(f"[{name}] may not set a seed; use the top-level seed")
    return cfg


def _pick(cls, section: dict, what: str) -> dict:
    known = {f.name for f in fields(cls)} - {"seed"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown [{what}] keys: {sorted(unknown)}")
    return dict(section)


def top_seed(args, cfg) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return seed


def env_config(args, cfg) -> EnvConfig:
    kw = _pick(EnvConfig, cfg.get("env", {}), "env")
    return EnvConfig(**kw, seed=component_seed(top_seed(args, cfg), "eval"))


def train_config(args, cfg) -> A.TrainConfig:
    kw = _pick(A.TrainConfig, cfg.get("train", {}), "train")
    if "hidden" in kw:
        kw["hidden"] = tuple(kw["hidden"])
    if getattr(args, "epochs", None) is not None:
        kw["epochs"] = args.epochs
    if getattr(args, "updates_per_episode", None) is not None:
        kw["updates_per_episode"] = args.updates_per_episode
    return A.TrainConfig(**kw, seed=component_seed(top_seed(args, cfg), "train"))


def _path(args, cfg, key: str, required: bool = True):
    val = getattr(args, key, None) or cfg.get("paths", {}).get(key)
    if val is None and required:
        raise ConfigError(f"missing --{key} (or [paths] {key})")
    return None if val is None else Path(val)


def _network_for(args, cfg, traj_path: Path) -> CameraNetwork:
    net_path = _path(args, cfg, "network", required=False) or traj_path.parent / "net.json"
    return load_network(net_path)


def _load_set(args, cfg, key: str) -> TrajectorySet:
    p = _path(args, cfg, key)
    return load_trajectories(p, network=_network_for(args, cfg, p))


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers() -> int:
    raw = os.environ.get("CAMSCHED_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CAMSCHED_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def _map(fn, items):
    n = _workers()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _select_targets(ts: TrajectorySet, k) -> list[int]:
    ids = ts.ids
    if k is None:
        return ids
    if k < 1:
        raise ConfigError("--targets must be >= 1")
    return ids[:k]


# ---------------------------------------------------------------- commands

def cmd_generate(args, cfg) -> int:
    synth = _pick(SynthConfig, cfg.get("synth", {}), "synth")
    for key in ("num_cameras", "num_targets", "topology"):
        if getattr(args, key, None) is not None:
            synth[key] = getattr(args, key)
    sc = SynthConfig.from_mapping(dict(synth, seed=component_seed(top_seed(args, cfg), "synth")))
    net, ts = generate_synthetic(sc)
    out = _out(args)
    save_network(net, out / "net.json")
    save_trajectories(ts, out / "traj.csv")
    with open(out / "links.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cam_a", "cam_b"])
        w.writerows(sorted(net.links or ()))
    print(f"wrote {len(ts)} trajectories on {net.num_cameras} cameras to {out}")
    return EXIT_OK


def cmd_split(args, cfg) -> int:
    ts = _load_set(args, cfg, "data")
    fraction = args.fraction if args.fraction is not None else cfg.get("split", {}).get("fraction", 0.5)
    train, test = split_train_test(ts, fraction, component_seed(top_seed(args, cfg), "split"))
    out = _out(args)
    save_trajectories(train, out / "train.csv")
    save_trajectories(test, out / "test.csv")
    save_network(ts.network, out / "net.json")
    print(f"train {len(train)} / test {len(test)} targets")
    return EXIT_OK


def cmd_train(args, cfg) -> int:
    ec = env_config(args, cfg)
    tc = train_config(args, cfg)
    ts = _load_set(args, cfg, "train")
    model = _path(args, cfg, "model", required=False)
    init = None
    if model is not None and args.resume:
        init = A.Policy.load(model, {"num_cameras": ts.network.num_cameras,
                                     "history_len": ec.history_len}).net

    def progress(row):
        if row["epoch"] % max(1, tc.epochs // 20) == 0:
            log.info("epoch %d  eps %.3f  running reward %.3f", row["epoch"], row["epsilon"],
                     row["running_reward"])

    res = A.train(ts, ec, tc, init_net=init, progress=progress)
    out = _out(args)
    model = model or out / "model.json"
    res.policy.save(model, res.adam, meta={"epochs": tc.epochs})
    res.write_log(out / "train_log.csv")
    tail = res.log[-max(1, len(res.log) // 10):]
    mean = float(np.mean([r["episode_reward"] for r in tail]))
    print(f"mean episode reward over the last {len(tail)} epochs: {mean:.4f}")
    return EXIT_OK


def _evaluate(ts, ids, run, mode, num_cameras):
    """Roll out ``run(tid)`` per target; returns (reports, outcomes, records per target)."""
    results = _map(run, ids)
    reports, outcomes, logs = [], [], {}
    for tid, (pred, recs) in zip(ids, results):
        o = M.SelectionOutcome.from_records(ts[tid], recs, num_cameras)
        outcomes.append(o)
        reports.append(M.target_report(o, mode, pred, ts[tid]))
        logs[tid] = recs
    return reports, outcomes, logs


def _emit(out: Path, stem: str, report: M.MetricReport, outcomes, num_cameras, logs, mode):
    restricted = [M.restrict_mode(o, mode) for o in outcomes]
    matrix, _ = M.confusion_matrix(restricted, num_cameras)
    report.confusion = matrix.tolist()
    (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
    (out / f"{stem}.txt").write_text(report.to_text(), encoding="utf-8")
    M.write_confusion_csv(matrix, out / f"confusion_{stem}.csv")
    logdir = out / "polllogs" / stem
    logdir.mkdir(parents=True, exist_ok=True)
    for tid, recs in logs.items():
        write_poll_log(recs, logdir / f"target_{tid}.csv")


def _mode(args, cfg) -> str:
    mode = args.mode or cfg.get("eval", {}).get("mode", "all")
    if mode not in M.MODES:
        raise ConfigError(f"--mode must be one of {M.MODES}")
    return mode


def cmd_eval(args, cfg) -> int:
    ec = env_config(args, cfg)
    ts = _load_set(args, cfg, "test")
    policy = A.Policy.load(_path(args, cfg, "model"),
                           {"num_cameras": ts.network.num_cameras, "history_len": ec.history_len,
                            "time_limit": ec.time_limit})
    ecfg = cfg.get("eval", {})
    rates = args.err_rates if args.err_rates is not None else ecfg.get("err_rates", DEFAULT_ERR_RATES)
    mode = _mode(args, cfg)
    k = args.targets if args.targets is not None else ecfg.get("targets")
    ids = _select_targets(ts, k)
    out = _out(args)
    n = ts.network.num_cameras
    rows = []
    for pct in rates:
        if not 0 <= pct <= 100:
            raise ConfigError(f"error rate {pct}% outside 0..100")
        cfg_r = replace(ec, err_rate=pct / 100.0)
        reports, outcomes, logs = _evaluate(
            ts, ids, lambda tid: A.run_policy(policy, ts, tid, cfg_r), mode, n)
        stem = f"eval_err{pct:02d}"
        rep = M.aggregate(reports, mode, label=f"policy err={pct}%")
        _emit(out, stem, rep, outcomes, n, logs, mode)
        rows.append((pct, rep))
        print(f"err {pct:3d}%  A {rep.accuracy:.4f}  P {rep.precision:.4f}  R {rep.recall:.4f}  "
              f"F {rep.frames_polled}  MCTA {rep.mcta:.4f}")
    with open(out / "mcta_vs_err.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["err_rate", "mcta", "accuracy", "precision", "recall", "frames_polled"])
        for pct, rep in rows:
            w.writerow([pct, repr(rep.mcta), repr(rep.accuracy), repr(rep.precision),
                        repr(rep.recall), rep.frames_polled])
    return EXIT_OK


def cmd_baseline(args, cfg) -> int:
    ec = env_config(args, cfg)
    ts = _load_set(args, cfg, "test")
    which = args.which or cfg.get("baseline", {}).get("which", "all")
    methods = METHODS if which == "all" else (which,)
    if which != "all" and which not in METHODS:
        raise ConfigError(f"--which must be one of {METHODS + ('all',)}")
    train_path = _path(args, cfg, "train", required=False)
    train = None
    if train_path is not None:
        train = load_trajectories(train_path, network=_network_for(args, cfg, train_path))
    if "gaussian" in methods and train is None:
        raise ConfigError("the gaussian baseline needs a training split (--train)")
    links_net = infer_links(train)[0] if train is not None else ts.network
    if "neighbor" in methods and not links_net.links:
        log.warning("no camera links known; neighbor search falls back to all cameras")
    gauss = B.fit_transition_gaussians(train) if train is not None else None
    runners = {
        "exhaustive": lambda tid: B.exhaustive_policy(ts, tid, ec),
        "neighbor": lambda tid: B.neighbor_policy(ts, tid, links_net, ec),
        "gaussian": lambda tid: B.gaussian_policy(ts, tid, links_net, gauss, ec),
    }
    mode = _mode(args, cfg)
    ids = _select_targets(ts, args.targets)
    out = _out(args)
    n = ts.network.num_cameras
    f_rows = []
    for method in methods:
        reports, outcomes, logs = _evaluate(ts, ids, runners[method], mode, n)
        rep = M.aggregate(reports, mode, label=method)
        _emit(out, f"baseline_{method}", rep, outcomes, n, logs, mode)
        f_rows += [(r.target_id, method, r.frames_polled) for r in reports]
        print(f"{method:<11} A {rep.accuracy:.4f}  P {rep.precision:.4f}  R {rep.recall:.4f}  "
              f"F {rep.frames_polled}")
    with open(out / "f_compare.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target_id", "method", "frames_polled"])
        w.writerows(f_rows)
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    rows = []
    for p in args.reports:
        d = json.loads(Path(p).read_text(encoding="utf-8"))
        try:
            rows.append((d.get("label") or Path(p).stem, d["mode"], d["accuracy"], d["precision"],
                         d["recall"], d["frames_polled"], d.get("mcta")))
        except KeyError as exc:
            raise ConfigError(f"{p}: not a metric report (missing {exc})") from exc
    out = _out(args)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "mode", "accuracy", "precision", "recall", "frames_polled", "mcta"])
        w.writerows(rows)
    width = max(len(r[0]) for r in rows)
    print(f"{'label':<{width}}  mode      A       P       R        F    MCTA")
    for label, mode, a, p, r, f, m in rows:
        ms = f"{m:.4f}" if m is not None else "-"
        print(f"{label:<{width}}  {mode:<4} {a:.4f}  {p:.4f}  {r:.4f}  {f:7d}  {ms}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _percent_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="top-level seed (overrides the config)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--verbose", "-v", action="count", default=0)

    parser = _Parser(prog="camsched", description="Camera selection for multi-camera tracking.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic network and trajectories")
    p.add_argument("--num-cameras", type=int)
    p.add_argument("--num-targets", type=int)
    p.add_argument("--topology", choices=("chain", "ring", "random-graph"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", parents=[common], help="split trajectories into train/test by target")
    p.add_argument("--data", help="trajectory CSV/JSONL")
    p.add_argument("--network", help="network JSON (default: net.json next to the data)")
    p.add_argument("--fraction", type=float)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", parents=[common], help="train the Q-network")
    p.add_argument("--train", help="training trajectories")
    p.add_argument("--network")
    p.add_argument("--model", help="model file to write (default: OUT/model.json)")
    p.add_argument("--resume", action="store_true", help="start from the weights in --model")
    p.add_argument("--epochs", type=int)
    p.add_argument("--updates-per-episode", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a trained policy")
    p.add_argument("--test", help="test trajectories")
    p.add_argument("--network")
    p.add_argument("--model")
    p.add_argument("--err-rates", type=_percent_list, help="percent grid, e.g. 0,5,10,15,20")
    p.add_argument("--mode", choices=M.MODES)
    p.add_argument("--targets", type=int, help="evaluate only the first K test targets")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", parents=[common], help="run the comparison schedulers")
    p.add_argument("which", nargs="?", choices=(*METHODS, "all"))
    p.add_argument("--test")
    p.add_argument("--train", help="training split for links and transit times")
    p.add_argument("--network")
    p.add_argument("--mode", choices=M.MODES)
    p.add_argument("--targets", type=int)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", parents=[common], help="tabulate metric report JSON files")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except OSError as exc:
        print(f"camsched: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ContractError, ShapeError, A.CapacityError, KeyError, TypeError) as exc:
        print(f"camsched: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
