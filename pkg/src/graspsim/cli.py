"""Command line entry point: train, sweep, plan, theory, selftest.

Every command resolves its configuration (defaults, then config file, then
flags), writes the resolved config next to its outputs, and emits
deterministic CSVs for a given config and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, save_config
from .env import LOG_COLUMNS
from .eval import (
    OraclePolicy,
    SWEEP_COLUMNS,
    SUMMARY_COLUMNS,
    THEORY_COLUMNS,
    run_sweep,
    theory_rows,
)
from .learner import (
    GreedyPolicy,
    NET_KEYS,
    QNets,
    TRAIN_LOG_COLUMNS,
    VARIANTS,
    get_variant,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .planner import plan_envelope, plan_suck
from .scene import ENVELOPE_CAPABLE, SUCK_CAPABLE, load_scene
from .selftest import run_selftest

PLAN_COLUMNS = (
    "object_id", "kind", "alpha_e", "gamma_e", "opening_d", "descent_opening",
    "alpha_s", "gamma_s", "sucker_index", "px", "py", "pz",
)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="config file (INI-style)")
    p.add_argument("--out", metavar="DIR", help="write outputs into this directory")
    p.add_argument("--seed", type=int, metavar="N", help="master random seed")
    p.add_argument("--policy", metavar="NAME", help="policy variant or 'oracle'")
    p.add_argument("--pe", metavar="LIST",
                   help="envelope fraction(s), comma separated")
    p.add_argument("--episodes", type=int, metavar="N",
                   help="episodes per sweep group (overrides the action budget)")
    p.add_argument("--p-fail", dest="p_fail", type=float, metavar="F",
                   help="post-geometry failure probability")
    p.add_argument("--resolution", type=int, metavar="N",
                   help="heightmap resolution (multiple of 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspsim",
        description="Hybrid enveloping/sucking grasp simulator and trainer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy variant")
    _add_common_flags(p_train)

    p_sweep = sub.add_parser("sweep", help="evaluate a policy across pe values")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--checkpoint", metavar="PATH",
                         help="trained checkpoint to evaluate (trains one if omitted)")

    p_plan = sub.add_parser("plan", help="dump grasp plans for a scene file")
    _add_common_flags(p_plan)
    p_plan.add_argument("--scene", metavar="PATH", required=True,
                        help="scene file to plan against")

    p_theory = sub.add_parser("theory", help="emit the efficiency theory tables")
    _add_common_flags(p_theory)

    p_self = sub.add_parser("selftest", help="run the built-in invariant checks")
    _add_common_flags(p_self)

    return parser


def _parse_pe_list(raw: str) -> tuple:
    try:
        values = tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad --pe list: {raw!r}") from None
    if not values:
        raise ConfigError("--pe needs at least one value")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"--pe value {v} outside [0, 1]")
    return values


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.policy is not None:
        cfg.policy = args.policy
    if args.pe is not None:
        values = _parse_pe_list(args.pe)
        cfg.pe_grid = values
        cfg.train_pe = values[0]
    if args.episodes is not None:
        cfg.episodes_per_group = args.episodes
    if args.p_fail is not None:
        cfg.p_fail = args.p_fail
    if args.resolution is not None:
        cfg.resolution = args.resolution
    if getattr(args, "checkpoint", None):
        cfg.checkpoint = args.checkpoint
    return cfg.validate()


def _run_dir(args, cfg: ExperimentConfig) -> Path:
    if args.out:
        d = Path(args.out)
    else:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S%f")
        d = Path(cfg.out_dir) / args.command / stamp
    d.mkdir(parents=True, exist_ok=True)
    return d


def _variant_for(cfg: ExperimentConfig):
    """The named variant, with the configured discount where it applies."""
    variant = get_variant(cfg.policy)
    if not variant.reactive and variant.gamma != cfg.gamma:
        variant = dataclasses.replace(variant, gamma=cfg.gamma)
    return variant


def _train_nets(cfg: ExperimentConfig):
    return train(
        variant=_variant_for(cfg),
        steps=cfg.steps,
        pe=cfg.train_pe,
        seed=cfg.seed,
        gripper=cfg.gripper,
        n_objects=cfg.n_objects,
        workspace_side=cfg.workspace_side,
        clutter=cfg.clutter,
        min_separation=cfg.min_separation,
        catalog=cfg.load_catalog(),
        resolution=cfg.resolution,
        p_fail=cfg.p_fail,
        clearance_threshold=cfg.clearance_threshold,
        max_steps=cfg.max_steps,
        lr=cfg.lr,
        eps_start=cfg.eps_start,
        eps_end=cfg.eps_end,
        eps_anneal_steps=cfg.eps_anneal_steps,
        sync_period=cfg.sync_period,
        replay=cfg.replay,
        replay_capacity=cfg.replay_capacity,
    )


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    if cfg.policy not in VARIANTS:
        raise ConfigError(f"train needs a learnable policy, not {cfg.policy!r}")
    rundir = _run_dir(args, cfg)
    save_config(cfg, rundir / "config.ini")
    result = _train_nets(cfg)
    save_checkpoint(rundir / "checkpoint.bin", result.nets, result.variant)
    write_csv(rundir / "train_log.csv", TRAIN_LOG_COLUMNS, result.log_rows)
    print(f"trained {cfg.policy} for {cfg.steps} steps "
          f"({result.episodes_started} episodes); outputs in {rundir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    rundir = _run_dir(args, cfg)
    save_config(cfg, rundir / "config.ini")

    if cfg.policy == "oracle":
        def factory():
            return OraclePolicy(cfg.gripper)
    else:
        variant = _variant_for(cfg)
        if cfg.checkpoint:
            nets, ck_name = load_checkpoint(cfg.checkpoint)
            if ck_name and ck_name != cfg.policy:
                print(f"note: checkpoint was trained as {ck_name!r}, "
                      f"evaluating as {cfg.policy!r}", file=sys.stderr)
        else:
            nets = _train_nets(cfg).nets
            save_checkpoint(rundir / "checkpoint.bin", nets, variant)

        def factory():
            copies = QNets(
                {k: nets.online[k].copy() for k in NET_KEYS},
                {k: nets.target[k].copy() for k in NET_KEYS},
            )
            return GreedyPolicy(copies, variant, cfg.gripper,
                                continual_update=cfg.continual_update, lr=cfg.lr)

    result = run_sweep(
        factory,
        cfg.pe_grid,
        seed=cfg.seed,
        gripper=cfg.gripper,
        n_objects=cfg.n_objects,
        catalog=cfg.load_catalog(),
        workspace_side=cfg.workspace_side,
        clutter=cfg.clutter,
        min_separation=cfg.min_separation,
        resolution=cfg.resolution,
        p_fail=cfg.p_fail,
        clearance_threshold=cfg.clearance_threshold,
        max_steps=cfg.max_steps,
        actions_per_group=cfg.actions_per_group,
        episodes_per_group=cfg.episodes_per_group,
        reps=cfg.reps,
        log_steps=True,
    )
    write_csv(rundir / "sweep.csv", SWEEP_COLUMNS, result.sweep_rows())
    write_csv(rundir / "summary.csv", SUMMARY_COLUMNS, result.summary_rows())
    write_csv(rundir / "steps.csv", ("pe", "rep") + LOG_COLUMNS, result.step_log_rows())
    print(f"swept {cfg.policy} over {len(cfg.pe_grid)} pe values x {cfg.reps} reps; "
          f"outputs in {rundir}")
    return 0


def _plan_rows(scene, gripper) -> list:
    rows = []
    for o in scene.objects:
        if o.grasp_affinity in ENVELOPE_CAPABLE:
            try:
                p = plan_envelope(scene, o.id, gripper)
            except ValueError:
                p = None
            if p is not None:
                t = p.pose.position
                rows.append((
                    str(o.id), "enveloping",
                    f"{p.alpha_e:.9g}", f"{p.gamma_e:.9g}", f"{p.opening_d:.9g}",
                    f"{p.descent_opening:.9g}", "", "", "",
                    f"{t[0]:.9g}", f"{t[1]:.9g}", f"{t[2]:.9g}",
                ))
        if o.grasp_affinity in SUCK_CAPABLE:
            try:
                p = plan_suck(scene, o.id, gripper)
            except ValueError:
                p = None
            if p is not None:
                t = p.pose.position
                rows.append((
                    str(o.id), "sucking", "", "", "", "",
                    f"{p.alpha_s:.9g}", f"{p.gamma_s:.9g}", str(p.sucker_index),
                    f"{t[0]:.9g}", f"{t[1]:.9g}", f"{t[2]:.9g}",
                ))
    return rows


def cmd_plan(args) -> int:
    cfg = resolve_config(args)
    scene = load_scene(args.scene)
    rundir = _run_dir(args, cfg)
    save_config(cfg, rundir / "config.ini")
    write_csv(rundir / "plans.csv", PLAN_COLUMNS, _plan_rows(scene, cfg.gripper))
    print(f"planned {len(scene)} objects from {args.scene}; outputs in {rundir}")
    return 0


def cmd_theory(args) -> int:
    cfg = resolve_config(args)
    rundir = _run_dir(args, cfg)
    save_config(cfg, rundir / "config.ini")
    write_csv(rundir / "theory.csv", THEORY_COLUMNS, theory_rows(cfg.pe_grid))
    print(f"theory table for {len(cfg.pe_grid)} pe values; outputs in {rundir}")
    return 0


def cmd_selftest(args) -> int:
    cfg = resolve_config(args)
    lines: list = []

    def emit(msg):
        lines.append(msg)
        print(msg)

    failures = run_selftest(emit)
    if args.out:
        rundir = _run_dir(args, cfg)
        save_config(cfg, rundir / "config.ini")
        with open(rundir / "selftest.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "train": cmd_train,
    "sweep": cmd_sweep,
    "plan": cmd_plan,
    "theory": cmd_theory,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
