"""Command-line driver: closed-loop runs, prediction comparisons, root exploration dumps.

Trace CSV columns (one row per agent per step, plus the final state):
    step, time, agent, x, y, vx, vy, ax, ay, heading, global_x, global_y,
    dv, dy, group, r_state, r_action, r_validation, r_immediate,
    valid_state, valid_action, collision

Exploration dump columns (one row per explored root action):
    scenario_hash, step, agent, dv, dy, n, q, group, selected, seeded

Comparison summary columns:
    mode, seeds, mean_velocity_deviation, std_velocity_deviation,
    collision_runs, mean_min_speed_ego
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ENHANCEMENTS, SearchConfig
from .environment import (COOPERATIVE, CONSTANT_VELOCITY, PREDICTION_MODES, Scenario,
                          global_state_pose, load_scenario, scenario_hash)
from .errors import ParseError, ScenarioValidationError
from .search.mcts import MCTS
from .search.model import DrivingModel
from .sim import DEFAULT_STEPS, SimulationTrace, run

log = logging.getLogger("decoc")

TRACE_HEADER = ["step", "time", "agent", "x", "y", "vx", "vy", "ax", "ay", "heading",
                "global_x", "global_y", "dv", "dy", "group", "r_state", "r_action",
                "r_validation", "r_immediate", "valid_state", "valid_action", "collision"]
DUMP_HEADER = ["scenario_hash", "step", "agent", "dv", "dy", "n", "q", "group", "selected", "seeded"]
SUMMARY_HEADER = ["mode", "seeds", "mean_velocity_deviation", "std_velocity_deviation",
                  "collision_runs", "mean_min_speed_ego"]

SCENARIO_ERRORS = (ParseError, ScenarioValidationError, KeyError, FileNotFoundError)


class ScenarioError(Exception):
    """Raised for anything wrong with the scenario the user asked for."""


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str | None, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if path is None or path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def trace_rows(trace: SimulationTrace):
    sc = trace.scenario
    road = sc.road

    def state_cols(s, spec):
        gx, gy, _ = global_state_pose(s, spec.direction, road)
        return [s.x, s.y, s.vx, s.vy, s.ax, s.ay, s.heading, gx, gy]

    for k, rec in enumerate(trace.steps):
        for i, spec in enumerate(sc.agents):
            a = rec.actions[i]
            v = rec.validations[i]
            yield ([k, rec.time, spec.id] + state_cols(rec.states[i], spec)
                   + [a.dv, a.dy, rec.groups[i], rec.state_rewards[i], rec.action_rewards[i],
                      rec.validation_rewards[i], rec.immediate[i],
                      v.valid_state, v.valid_action, v.collision])
    k = len(trace.steps)
    for i, spec in enumerate(sc.agents):
        yield ([k, trace.final_time, spec.id] + state_cols(trace.final_state[i], spec)
               + [""] * 10)


def _metrics_table(trace: SimulationTrace) -> str:
    m = trace.metrics
    lines = [f"{'agent':>5} {'v_des':>7} {'min_speed':>10}"]
    for a, v in zip(trace.scenario.agents, m.min_speed):
        lines.append(f"{a.id:>5} {a.desired.v_des:>7.2f} {v:>10.3f}")
    lines.append(f"velocity_deviation {m.velocity_deviation:.3f}")
    lines.append(f"collision_count    {m.collision_count}")
    lines.append(f"steps_completed    {m.steps_completed}")
    return "\n".join(lines)


def _record_line(rec: dict) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in rec.items())


def _load(name: str) -> Scenario:
    try:
        return load_scenario(name)
    except SCENARIO_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise ScenarioError(str(msg)) from None


def _config(sc: Scenario, args) -> SearchConfig:
    cfg = sc.search
    if getattr(args, "enhancements", None):
        cfg = cfg.with_enhancements(args.enhancements)
    if args.iterations is not None:
        cfg = replace(cfg, iterations=args.iterations)
    return cfg


def cmd_run(args) -> int:
    sc = _load(args.scenario)
    cfg = _config(sc, args)
    trace = run(sc, args.steps, cfg, args.seed, args.prediction)
    if args.out:
        _write_csv(args.out, TRACE_HEADER, trace_rows(trace))
    rec = {"scenario": sc.name, "prediction": args.prediction or "per-agent", "seed": args.seed,
           "iterations": cfg.iterations, **trace.metrics.as_record()}
    print(_metrics_table(trace))
    print(_record_line(rec))
    return 0


def cmd_explore(args) -> int:
    sc = _load(args.scenario)
    base = sc.search if args.iterations is None else replace(sc.search, iterations=args.iterations)
    # reach the analysed step with the scenario's own settings, so that the
    # enhancement toggles only ever affect the dumped search
    state = sc.initial_state
    if args.steps > 0:
        lead = run(sc, args.steps, base, args.seed, args.prediction)
        if lead.collided:
            raise ScenarioError(f"collision before step {args.steps}; nothing to analyse")
        state = lead.final_state
    cfg = _config(sc, args)
    result = explore(sc, state, cfg, args.seed, args.prediction)
    digest = scenario_hash(sc)
    rows = ([digest, args.steps, sc.agents[r.agent].id, r.dv, r.dy, r.n, r.q, r.group,
             r.selected, r.seeded] for r in result.rows)
    _write_csv(args.dump or "-", DUMP_HEADER, rows)
    if args.dump:
        print(_record_line({"scenario": sc.name, "scenario_hash": digest, "step": args.steps,
                            "enhancements": args.enhancements, "explored": len(result.rows)}))
    return 0


def explore(sc: Scenario, state, cfg: SearchConfig, seed: int, prediction: str | None, ego: int = 0):
    """One search from ``state``, as the ego would run it, keeping every root row."""
    covered = (ego,) if prediction == CONSTANT_VELOCITY else None
    cfg = replace(cfg, seed=seed + sc.agents[ego].id)
    model = DrivingModel(sc, cfg, covered)
    return MCTS(model, cfg, np.random.default_rng(cfg.seed)).search(state)


def compare(sc: Scenario, cfg: SearchConfig, seeds: int, steps: int, first_seed: int = 0) -> list[list]:
    rows = []
    for mode in (CONSTANT_VELOCITY, COOPERATIVE):
        devs, vmin, hits = [], [], 0
        for seed in range(first_seed, first_seed + seeds):
            m = run(sc, steps, cfg, seed, mode).metrics
            log.info("%s seed=%d deviation=%.3f collisions=%d", mode, seed,
                     m.velocity_deviation, m.collision_count)
            devs.append(m.velocity_deviation)
            vmin.append(m.min_speed[0])
            hits += m.collision_count > 0
        rows.append([mode, seeds, float(np.mean(devs)), float(np.std(devs)), hits,
                     float(np.mean(vmin))])
    return rows


def cmd_compare(args) -> int:
    sc = _load(args.scenario)
    cfg = _config(sc, args)
    rows = compare(sc, cfg, args.seeds, args.steps, args.seed)
    if args.out:
        _write_csv(args.out, SUMMARY_HEADER, rows)
    print(" ".join(f"{h:>24}" for h in SUMMARY_HEADER))
    for r in rows:
        print(" ".join(f"{_fmt(v) if not isinstance(v, float) else f'{v:.3f}':>24}" for v in r))
    for r in rows:
        print(_record_line(dict(zip(SUMMARY_HEADER, r))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoc", description="Cooperative trajectory planning with continuous-action MCTS")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, prediction_default):
        p.add_argument("--scenario", required=True, help="built-in name (bottleneck, merge-in) or path to a JSON scenario")
        p.add_argument("--prediction", choices=PREDICTION_MODES, default=prediction_default)
        p.add_argument("--iterations", type=int, default=None, help="search iterations per planning step")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--steps", type=int, default=DEFAULT_STEPS)

    p = sub.add_parser("run", help="closed-loop simulation")
    common(p, COOPERATIVE)
    p.add_argument("--enhancements", choices=list(ENHANCEMENTS), default=None)
    p.add_argument("--out", help="trace CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", help="dump the root statistics of one search")
    common(p, COOPERATIVE)
    p.set_defaults(steps=0)
    p.add_argument("--enhancements", choices=list(ENHANCEMENTS), default="groups+guided+similarity")
    p.add_argument("--dump", help="dump CSV path (default: standard output)")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("compare", help="both prediction modes over several seeds")
    common(p, None)
    p.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")
    p.add_argument("--enhancements", choices=list(ENHANCEMENTS), default=None)
    p.add_argument("--out", help="summary CSV path")
    p.set_defaults(func=cmd_compare)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("DECOC_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("iterations", "steps", "seeds"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name == "steps" and args.command == "explore" else 1):
            parser.error(f"--{name} must be positive")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"decoc: scenario error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        log.debug("internal error", exc_info=True)
        print(f"decoc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
