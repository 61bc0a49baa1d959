"""Command-line entry point: ``colorizer <subcommand> ...``.

Exit status is 0 on success, 1 on operational errors and 2 on usage errors.
Set ``COLORIZER_NUM_THREADS`` to cap the BLAS thread pool.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import VERSION, CheckpointError, decode_checkpoint, load_checkpoint
from .colorspace import lab_to_rgb, rgb_to_lab
from .imageio import IMAGE_SUFFIXES, list_images, read_image, write_png
from .metrics import eval_report
from .nn.gradcheck import run_suite
from .pipeline import ColorizeOptions, colorize
from .trainer import ConfigError, TrainConfig, load_config, train

THREADS_ENV = "COLORIZER_NUM_THREADS"
GRADCHECK_TOL = 1e-3

class UsageError(Exception):
    pass


def build_parser():
    parser = argparse.ArgumentParser(prog="colorizer", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only print warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train", help="train a network on a directory of color images")
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--data", dest="data_dir", help="training image directory (overrides config)")
    p.add_argument("--out", dest="out_dir", help="output directory (overrides config)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--head", choices=["regression", "classification"])

    p = sub.add_parser("colorize", help="colorize images with a trained checkpoint")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("inputs", nargs="+", type=Path, help="image files or directories")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--decode", choices=["mode", "anneal"], default="anneal")
    p.add_argument("--temp", type=float, default=0.38)
    p.add_argument("--saturation", type=float, default=1.0)

    p = sub.add_parser("eval", help="score predicted images against ground truth")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--truth", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="report CSV path")

    p = sub.add_parser("convert", help="convert between PNG (RGB) and .npy (Lab)")
    p.add_argument("--to", required=True, choices=["lab", "rgb"])
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)

    sub.add_parser("gradcheck", help="verify every layer's backward pass by finite differences")

    p = sub.add_parser("inspect", help="print a checkpoint's header and tensors")
    p.add_argument("checkpoint", type=Path)
    return parser


def cmd_train(args):
    config = TrainConfig()
    if args.config is not None:
        if not args.config.is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        config = load_config(args.config)
    overrides = {k: getattr(args, k) for k in
                 ("data_dir", "out_dir", "epochs", "seed", "lr", "batch_size", "head")
                 if getattr(args, k) is not None}
    config = config.replace(**overrides)
    if not config.data_dir:
        raise UsageError("no data directory: set data_dir in the config or pass --data")
    result = train(config)
    print(f"wrote {result.final_checkpoint} ({len(result.records)} steps, "
          f"final loss {result.records[-1].loss:.6g})")
    return 0


def _expand_inputs(paths):
    files = []
    for p in paths:
        if p.is_dir():
            files.extend(list_images(p))
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"input not found: {p}")
    return files


def cmd_colorize(args):
    network, grid = load_checkpoint(args.model)
    opts = ColorizeOptions(decode=args.decode, temperature=args.temp, saturation=args.saturation)
    files = _expand_inputs(args.inputs)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in files:
        img = read_image(path, keep_gray=True)
        target = args.out / (path.stem + ".png")
        write_png(target, colorize(img, network, grid, opts))
        print(f"{path} -> {target}")
    return 0


def cmd_eval(args):
    report = eval_report(args.pred, args.truth)
    report.to_csv(args.out)
    print(report.to_text())
    return 0


def cmd_convert(args):
    if args.to == "lab":
        lab = rgb_to_lab(read_image(args.input))
        with open(args.output, "wb") as fh:
            np.save(fh, lab)
    else:
        if args.input.suffix.lower() in IMAGE_SUFFIXES:
            raise UsageError("--to rgb expects a .npy Lab array as input")
        write_png(args.output, lab_to_rgb(np.load(args.input)))
    print(f"{args.input} -> {args.output}")
    return 0


def cmd_gradcheck(args):
    worst = 0.0
    for name, err in run_suite():
        status = "ok" if err < GRADCHECK_TOL else "FAIL"
        print(f"{name:<36} max_rel_err={err:.3e} {status}")
        worst = max(worst, err)
    return 0 if worst < GRADCHECK_TOL else 1


def cmd_inspect(args):
    config, tensors = decode_checkpoint(args.checkpoint.read_bytes())
    print(f"version: {VERSION}")
    for section, values in config.items():
        print(f"{section}: " + ", ".join(f"{k}={v}" for k, v in values.items()))
    print(f"tensors: {len(tensors)}")
    for name, arr in tensors.items():
        print(f"  {name:<24} {'x'.join(map(str, arr.shape)) or 'scalar'}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "colorize": cmd_colorize,
    "eval": cmd_eval,
    "convert": cmd_convert,
    "gradcheck": cmd_gradcheck,
    "inspect": cmd_inspect,
}


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        threads = _thread_limit()
        if threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                return COMMANDS[args.command](args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"colorizer {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ConfigError, CheckpointError, RuntimeError) as exc:
        print(f"colorizer {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
