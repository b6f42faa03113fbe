"""Command-line entry point: ``eongp <subcommand> --config run.yaml --seed N``.

Exit codes: 0 success, 2 configuration error, 3 oracle failure, 4 data error,
1 anything else raised by the package.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import EongpError
from .config import load_config
from .stages import STAGES, RunDir, run_pipeline, run_stage

HELP = {
    "synth-corpus": "write a synthetic labeled corpus into <run_dir>/corpus",
    "train-surrogate": "train the surrogate emotion classifier on the pretrain-tagged clips",
    "prefilter": "drop clips the clean pipeline already misclassifies or mistranscribes",
    "split": "tag user utterances tailor/reserve/eval, per speaker",
    "evolve": "pretrain then tailor the tone population; write finalists and history",
    "sweep": "score finalist x amplitude multiplier on the tailor split and pick one",
    "evaluate": "held-out ESR/WER/MCC/NMI for the selected perturbation plus a muted control",
    "defend": "re-run the evaluation with each defense on the classifier input",
    "attribute": "band-occlusion attribution on clean and perturbed eval clips",
    "report": "assemble summary.md from the run directory",
    "run": "every stage in order",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eongp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in (*STAGES, "run"):
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", help="YAML or JSON run configuration (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="overrides the config seed; one of the two is required")
        p.add_argument("--run-dir", help="overrides the config run_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, run_dir=args.run_dir)
        if args.command == "run":
            info = run_pipeline(cfg, run=RunDir(cfg.run_dir))
        else:
            info = run_stage(args.command, cfg, RunDir(cfg.run_dir))
    except EongpError as exc:
        print(f"eongp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps(info, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
