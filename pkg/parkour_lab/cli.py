import argparse
import sys
from pathlib import Path

import numpy as np

from .harness import (
    RunConfig,
    ablation_frame,
    ablation_run,
    evaluate,
    latest_checkpoint,
    load_agent,
    reports_frame,
    train,
)
from .sensors import CameraPose, render_depth, write_depth
from .sim import RobotState
from .terrain import (
    PRESETS,
    Family,
    TerrainSpec,
    generate,
    preset_spec,
    sample_heights,
    write_heightfield,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    """Bad command line arguments"""


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config(args):
    config = RunConfig.load(args.config) if args.config else RunConfig()
    run = {}
    for key in ("seed", "out", "iterations", "n_envs", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    return config.replace(run=run) if run else config


def _spec(args, config):
    lane = config.lane
    if args.preset:
        return preset_spec(
            args.preset,
            args.seed,
            config.terrain,
            lane.lane_length,
            lane.lane_width,
        )
    return TerrainSpec(
        args.family,
        args.level,
        args.seed,
        lane_length=lane.lane_length,
        lane_width=lane.lane_width,
    )


def gen_terrain(args):
    config = _config(args)
    spec = _spec(args, config)
    hf = generate(spec, config.terrain)
    write_heightfield(hf, args.output)
    print("Terrain | {} written to {}".format(spec, args.output))


def render(args):
    config = _config(args)
    hf = generate(_spec(args, config), config.terrain)
    ground = args.z
    if ground is None:
        ground = float(sample_heights(hf, args.x, args.y, clamp=True))
    state = RobotState.at_rest(
        (args.x, args.y, ground + config.body.stance_height),
        0.0,
        0.0,
        np.radians(args.yaw),
        config=config.body,
    )
    pose = CameraPose.mounted(state, config.camera)
    image = render_depth(hf, pose, config.camera)
    write_depth(image, args.output)
    print(
        "Depth | {}x{} image written to {}".format(
            image.width, image.height, args.output
        )
    )


def train_command(args):
    config = _config(args)
    if args.deterministic:
        config = config.replace(run={"deterministic": True})
    resume = args.resume
    if resume == "latest":
        resume = latest_checkpoint(config.run.out)
        if resume is None:
            raise ValueError(
                "No checkpoint to resume in '{}'".format(config.run.out)
            )
    trainer = train(config, resume=resume, verbose=not args.quiet)
    print(
        "Training | finished at iteration {}, checkpoint {}".format(
            trainer.iteration, trainer.checkpoint_path()
        )
    )


def _checkpoint_config(args):
    if args.config:
        return _config(args)
    saved = Path(args.checkpoint).resolve().parent.parent / "config.ini"
    if not saved.exists():
        raise ValueError(
            "No --config given and no config.ini next to '{}'".format(
                args.checkpoint
            )
        )
    args.config = str(saved)
    return _config(args)


def eval_command(args):
    config = _checkpoint_config(args)
    agent = load_agent(args.checkpoint, config)
    presets = list(PRESETS) if args.preset == ["all"] else args.preset
    reports = []
    for preset in presets:
        dump = None
        if args.dump_traj:
            dump = Path(args.dump_traj) / preset
        report = evaluate(
            agent,
            config,
            preset,
            args.trials,
            args.seed,
            threads=config.run.threads,
            dump_traj=dump,
            checkpoint=args.checkpoint,
            verbose=not args.quiet,
        )
        print(report)
        reports.append(report)
    if args.csv:
        reports_frame(reports).to_csv(args.csv, index=False)


def ablate_command(args):
    config = _config(args)
    results = ablation_run(
        config,
        args.variant,
        presets=tuple(args.preset),
        seeds=tuple(args.seeds),
        trials=args.trials,
        verbose=not args.quiet,
    )
    frame = ablation_frame(results)
    path = Path(config.run.out) / "ablation_{}.csv".format(args.variant)
    frame.to_csv(path, index=False)
    print("Ablation | results written to {}".format(path))


def build_parser():
    parser = Parser(
        prog="parkour-lab",
        description="Desk-scale quadruped parkour training lab",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def terrain_args(sub):
        sub.add_argument("--config", help="INI run config")
        sub.add_argument("--preset", choices=sorted(PRESETS))
        sub.add_argument(
            "--family",
            default=Family.STEPPING_STONES.value,
            choices=[f.value for f in Family],
        )
        sub.add_argument("--level", type=int, default=0)
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--output", "-o", required=True)

    sub = commands.add_parser("gen-terrain", help="Write a terrain lane")
    terrain_args(sub)
    sub.set_defaults(handler=gen_terrain)

    sub = commands.add_parser(
        "render-depth", help="Render a depth frame on a terrain lane"
    )
    terrain_args(sub)
    sub.add_argument("--x", type=float, default=1.0)
    sub.add_argument("--y", type=float, default=0.0)
    sub.add_argument("--z", type=float, help="Ground height under the base")
    sub.add_argument("--yaw", type=float, default=0.0, help="Degrees")
    sub.set_defaults(handler=render)

    sub = commands.add_parser("train", help="Train an agent")
    sub.add_argument("--config", help="INI run config")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")
    sub.add_argument("--iterations", type=int)
    sub.add_argument("--n-envs", dest="n_envs", type=int)
    sub.add_argument("--threads", type=int)
    sub.add_argument("--deterministic", action="store_true")
    sub.add_argument(
        "--resume", help="Checkpoint to continue from, or 'latest'"
    )
    sub.add_argument("--quiet", action="store_true")
    sub.set_defaults(handler=train_command)

    sub = commands.add_parser("eval", help="Evaluate a checkpoint")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--config", help="Defaults to the run's config.ini")
    sub.add_argument(
        "--preset",
        nargs="+",
        default=["stepping_stones"],
        choices=sorted(PRESETS) + ["all"],
    )
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--dump-traj", dest="dump_traj")
    sub.add_argument("--csv", help="Write the reports to a CSV file")
    sub.add_argument("--quiet", action="store_true")
    sub.set_defaults(handler=eval_command)

    sub = commands.add_parser(
        "ablate", help="Train and evaluate the full method and a variant"
    )
    sub.add_argument("--variant", required=True)
    sub.add_argument("--config", help="INI run config")
    sub.add_argument("--out")
    sub.add_argument("--iterations", type=int)
    sub.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    sub.add_argument(
        "--preset",
        nargs="+",
        default=["stepping_stones_l2"],
        choices=sorted(PRESETS),
    )
    sub.add_argument("--trials", type=int)
    sub.add_argument("--quiet", action="store_true")
    sub.set_defaults(handler=ablate_command)
    return parser


def main(argv=None):
    """
    Command line entry point

    Returns
    -------
    int
        0 on success, 1 for usage errors, 2 for runtime failures
    """
    try:
        args = build_parser().parse_args(argv)
        args.handler(args)
    except (UsageError, ValueError) as error:
        print("error: {}".format(error), file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, OSError) as error:
        print("error: {}".format(error), file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
