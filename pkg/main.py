import argparse
import sys

from config import Config
from pipeline.defense import cmd_defense
from pipeline.evaluate import cmd_eval
from pipeline.gen import cmd_gen
from pipeline.poison import cmd_poison
from pipeline.run_config import RunConfig
from pipeline.solve import cmd_solve
from utils.errors import ConfigError, PosePoisonError
from utils.logger import setup_logger

# Initialize Logger
logger = setup_logger("Main")

EXIT_INTERNAL = 1


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def _common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    parser.add_argument("--force", action="store_true")
    parser.add_argument("--threads", type=int, default=Config.THREADS)


def _thresholds(parser):
    parser.add_argument("--model-points", type=int, default=Config.MODEL_POINTS)
    parser.add_argument("--add-fraction", type=float, default=Config.ADD_DIAMETER_FRACTION)
    parser.add_argument("--trans-max", type=float, default=Config.TRANSLATION_MAX)
    parser.add_argument("--rot-max-deg", type=float, default=Config.ROTATION_MAX_DEG)
    parser.add_argument("--px-max", type=float, default=Config.PIXEL_MAX)


def build_parser():
    parser = ArgumentParser(prog=Config.TOOL_NAME, description="6DoF pose backdoor-attack toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    gen = sub.add_parser("gen", help="render a synthetic RGB-D dataset")
    _common(gen)
    gen.add_argument("--mesh", default="builtin:box", help="OBJ/PLY path or builtin:<name>")
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--width", type=int, default=Config.IMAGE_WIDTH)
    gen.add_argument("--height", type=int, default=Config.IMAGE_HEIGHT)
    gen.add_argument("--fx", type=float, default=Config.FX)
    gen.add_argument("--fy", type=float, default=Config.FY)
    gen.add_argument("--cx", type=float, default=Config.CX)
    gen.add_argument("--cy", type=float, default=Config.CY)
    gen.add_argument("--z-min", type=float, default=0.6)
    gen.add_argument("--z-max", type=float, default=1.2)
    gen.add_argument("--background", choices=["checker", "flat", "clutter"], default="checker")
    gen.add_argument("--num-keypoints", type=int, default=Config.NUM_KEYPOINTS)
    gen.add_argument("--split-ratio", type=float, default=Config.SPLIT_RATIO)
    gen.add_argument("--linemod-poses", default=None, metavar="DIR",
                     help="render one scene per LINEMOD rot/tra pair instead of sampling --n poses")
    gen.set_defaults(handler=cmd_gen)

    poison = sub.add_parser("poison", help="write a poisoned copy of a dataset")
    _common(poison)
    poison.add_argument("--dataset", required=True)
    poison.add_argument("--rate", type=float, default=Config.POISON_RATE)
    poison.add_argument("--strategy", choices=["end_to_end", "pnp_keypoints"], default="end_to_end")
    poison.add_argument("--modality", choices=["rgbd", "rgb"], default="rgbd")
    poison.add_argument("--trigger", default="builtin:cube", help="builtin:<cube|pyramid|octahedron> or a mesh path")
    poison.add_argument("--trigger-size", type=float, default=Config.TRIGGER_SIZE)
    poison.add_argument("--trigger-pose", type=float, nargs=12, default=None)
    poison.add_argument("--delta-trans", type=float, nargs=3, default=[0.2, 0.0, 0.0], metavar=("X", "Y", "Z"))
    poison.add_argument("--delta-rot", type=float, nargs=3, default=[0.0, 0.0, 20.0], metavar=("RX", "RY", "RZ"),
                        help="xyz Euler angles in degrees")
    poison.add_argument("--offset-frame", choices=["camera", "object"], default=Config.OFFSET_FRAME)
    poison.add_argument("--keypoint-mode", choices=["reproject", "constant_px"], default="reproject")
    poison.add_argument("--px-offset", type=float, nargs="+", default=None,
                        help="du dv (all keypoints) or one du dv pair per keypoint")
    poison.add_argument("--min-visible", type=float, default=Config.MIN_VISIBLE_FRACTION)
    poison.set_defaults(handler=cmd_poison)

    solve = sub.add_parser("solve", help="recover poses from keypoint annotations")
    _common(solve)
    solve.add_argument("--dataset", required=True)
    solve.add_argument("--annotations", default=None)
    solve.add_argument("--direct", action="store_true", help="skip vector-field voting")
    solve.add_argument("--hypotheses", type=int, default=Config.RANSAC_HYPOTHESES)
    solve.add_argument("--cos-threshold", type=float, default=Config.INLIER_COS_THRESHOLD)
    solve.set_defaults(handler=cmd_solve)

    evaluate = sub.add_parser("eval", help="score predictions (ADD, PEA, 2DPE, ASR)")
    _common(evaluate)
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--predictions", required=True)
    evaluate.add_argument("--subset", choices=["all", "train", "test"], default="all")
    evaluate.add_argument("--baseline", default=None, help="report.json of an unpoisoned run")
    evaluate.add_argument("--scores", default=None, help="per-sample scores (JSON lines)")
    _thresholds(evaluate)
    evaluate.set_defaults(handler=cmd_eval)

    defense = sub.add_parser("defense", help="ASR vs clean-data retraining ratio")
    _common(defense)
    defense.add_argument("--dataset", required=True)
    defense.add_argument("--run", action="append", default=None, metavar="RATIO:PREDICTIONS")
    defense.add_argument("--simulate", default=None, metavar="RATIO:DRIFT,...")
    _thresholds(defense)
    defense.set_defaults(handler=cmd_defense)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        rc = RunConfig.from_args(args)
        logger.info(f"Running {rc.command} (config {rc.config_hash[:12]})")
        return args.handler(rc)
    except PosePoisonError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
