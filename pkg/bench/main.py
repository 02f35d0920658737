"""Command-line entry point: sizes, search, train, eval, report, experiment."""
import argparse
import os
import sys

from app.core.config import Config, default_data_dir, get_scale, load_experiment_config
from app.core.errors import MemClfError, NoFeasibleModelError, SpecError
from app.core.logs import configure_logging, get_logger
from app.core.rng import seeded_rng
from app.core.serialization import load_model, save_model
from app.core.sizing import check_density
from app.data.cifar import load_cifar10
from app.harness import (
    EvalReport, ResultCell, emit_report, evaluate, parse_report, prepare_split, run_experiment,
)
from app.managers.results_manager import ResultsManager
from app import bonsai, directconv, fastgrnn, protonn

log = get_logger("cli")

FAMILIES = ("directconv", "protonn", "bonsai", "fastgrnn")
ROW_NAMES = {"directconv": "Direct Conv", "protonn": "ProtoNN", "bonsai": "Bonsai"}
MODE_NAMES = {"row": "Row", "channel": "Channel", "multi": "Multi"}


def density(text):
    try:
        return check_density(float(text))
    except (ValueError, SpecError):
        raise argparse.ArgumentTypeError(f"invalid density {text!r}, expected a number in (0, 1]") from None


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def add_spec_flags(p):
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--arch", help="direct conv architecture, e.g. 'A,C1(8,3),M,D*'")
    p.add_argument("--d", type=positive_int, help="ProtoNN projection dimension")
    p.add_argument("--m", type=positive_int, help="ProtoNN prototype count")
    p.add_argument("--density", type=density, default=Config.PROTONN_DENSITY, help="ProtoNN W density")
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--depth", type=positive_int, help="Bonsai tree depth")
    p.add_argument("--dim", type=positive_int, help="Bonsai projection dimension")
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="channel", help="FastGRNN sequencing mode")
    p.add_argument("--hidden", type=positive_int, help="FastGRNN hidden size")
    p.add_argument("--dw", type=density, default=1.0, help="FastGRNN W density")
    p.add_argument("--du", type=density, default=1.0, help="FastGRNN U density")


def add_run_flags(p):
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-dir", default=None, help=f"CIFAR-10 binaries (default ${Config.DATA_DIR_ENV})")
    p.add_argument("--workers", type=positive_int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="bench", description="Memory-budgeted CIFAR-10 classifiers.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("sizes", help="print a spec's memory footprint")
    add_spec_flags(p)

    p = sub.add_parser("search", help="search one family at one budget")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--budget", type=int, required=True, choices=Config.BUDGETS_KB)
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default="channel", help="FastGRNN sequencing mode")
    p.add_argument("--out", default="results")
    add_run_flags(p)

    p = sub.add_parser("train", help="train one spec and save the model")
    add_spec_flags(p)
    p.add_argument("--epochs", type=positive_int, default=None)
    p.add_argument("--budget", type=int, choices=Config.BUDGETS_KB, default=None,
                   help="FastGRNN budget the learning-rate and weight-decay rules follow")
    p.add_argument("--model-out", required=True)
    add_run_flags(p)

    p = sub.add_parser("eval", help="test accuracy of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", default=None)

    p = sub.add_parser("report", help="render a results CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("md", "markdown", "csv"), default="md")

    p = sub.add_parser("experiment", help="run a YAML-configured experiment")
    p.add_argument("--config", required=True)
    return parser


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise SpecError(f"--family {args.family} needs {' '.join(missing)}")


def spec_from_args(args):
    """The family spec object the flags describe."""
    if args.family == "directconv":
        _require(args, "arch")
        return directconv.parse_arch(args.arch)
    if args.family == "protonn":
        _require(args, "d", "m")
        lr = Config.PROTONN_LRS[1] if args.lr is None else args.lr
        return protonn.ProtoNNSpec(args.d, args.m, args.gamma, lr, args.density)
    if args.family == "bonsai":
        _require(args, "depth", "dim")
        return bonsai.BonsaiSpec(args.depth, args.dim)
    _require(args, "hidden")
    return fastgrnn.FastGrnnSpec(args.mode, args.hidden, args.dw, args.du)


def spec_footprint(family, spec):
    if family == "directconv":
        return directconv.cnn_footprint(spec)
    return spec.footprint()


def row_name(family, mode=None):
    if family == "fastgrnn":
        return f"FastGRNN {MODE_NAMES[mode]}"
    return ROW_NAMES[family]


def _data_dir(args):
    data_dir = args.data_dir or default_data_dir()
    if data_dir is None:
        raise SpecError(f"pass --data-dir or set {Config.DATA_DIR_ENV}")
    return data_dir


def cmd_sizes(args):
    print(spec_footprint(args.family, spec_from_args(args)).describe())
    return 0


def cmd_search(args):
    scale = get_scale(args.scale)
    row = row_name(args.family, args.mode)
    report = EvalReport()
    try:
        if args.family == "protonn" and not protonn.feasible_grid(args.budget):
            raise NoFeasibleModelError("protonn", args.budget)
        split = prepare_split(_data_dir(args), scale, args.seed)
        if args.family == "directconv":
            best = directconv.sampling_search(
                args.budget, split, n=scale.cnn_samples, seed=args.seed,
                partial_epochs=scale.epochs(Config.CNN_PARTIAL_EPOCHS),
                full_epochs=scale.epochs(Config.CNN_FULL_EPOCHS), workers=args.workers).best
        elif args.family == "protonn":
            best = protonn.protonn_grid_search(args.budget, split, scale, args.seed, args.workers)
        elif args.family == "bonsai":
            best = bonsai.bonsai_search(args.budget, split, scale, args.seed, args.workers)
        else:
            best = fastgrnn.fastgrnn_search(args.budget, args.mode, split, scale, args.seed, args.workers)
    except NoFeasibleModelError:
        report.add(ResultCell.infeasible(row, args.budget))
        ResultsManager(args.out).save(report, merge=True)
        print(f"{row} @ {args.budget}KB: no feasible model")
        return 0

    report.add(ResultCell.from_candidate(row, args.budget, best))
    ok, message, _ = ResultsManager(args.out).save(report, merge=True)
    if not ok:
        raise MemClfError(message)
    print(f"{row} @ {args.budget}KB: {best.spec} {best.footprint.describe()} val_acc={best.val_acc:.3f}")
    return 0


def cmd_train(args):
    spec = spec_from_args(args)
    scale = get_scale(args.scale)
    split = prepare_split(_data_dir(args), scale, args.seed)

    def epochs(full):
        return args.epochs if args.epochs is not None else scale.epochs(full)

    if args.family == "directconv":
        model = directconv.CnnModel.initialize(spec, seeded_rng(args.seed))
        kwargs = {} if args.lr is None else {"lr_init": args.lr}
        model, history = directconv.train_cnn(model, split, epochs=epochs(Config.CNN_FULL_EPOCHS),
                                              seed=args.seed, **kwargs)
    elif args.family == "protonn":
        model, history = protonn.protonn_train(split, spec.d, spec.m, spec.density, spec.gamma, spec.lr,
                                               epochs=epochs(Config.PROTONN_EPOCHS), seed=args.seed)
    elif args.family == "bonsai":
        model, _, history = bonsai.bonsai_train(split, spec, epochs=epochs(Config.BONSAI_EPOCHS),
                                                lr=Config.BONSAI_LR if args.lr is None else args.lr,
                                                seed=args.seed)
    else:
        model, history = fastgrnn.fastgrnn_train(split, spec, epochs=epochs(Config.FASTGRNN_EPOCHS),
                                                 lr=Config.FASTGRNN_LR if args.lr is None else args.lr,
                                                 budget_kb=args.budget, seed=args.seed)

    os.makedirs(os.path.dirname(os.path.abspath(args.model_out)), exist_ok=True)
    save_model(args.model_out, model)
    print(f"{spec} {model.footprint().describe()} val_acc={history.best_val_acc:.3f} -> {args.model_out}")
    return 0


def cmd_eval(args):
    try:
        model = load_model(args.model)
    except OSError as e:
        raise MemClfError(f"cannot read {args.model}: {e.strerror}") from None
    _, test = load_cifar10(_data_dir(args))
    acc = evaluate(model, test)
    print(f"test_acc={acc:.{Config.ACCURACY_DECIMALS}f} {model.footprint().describe()}")
    return 0


def cmd_report(args):
    try:
        with open(args.input, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SpecError(f"cannot read {args.input}: {e.strerror}") from None
    sys.stdout.write(emit_report(parse_report(text), args.format))
    return 0


def cmd_experiment(args):
    cfg = load_experiment_config(args.config)
    scale = get_scale(cfg.scale)
    split = prepare_split(cfg.data_dir, scale, cfg.seed, cfg.standardize)
    report = run_experiment(cfg.families, cfg.budgets, split, cfg.seed, scale, cfg.workers)
    ok, message, _ = ResultsManager(cfg.output_dir).save(report)
    if not ok:
        raise MemClfError(message)
    sys.stdout.write(emit_report(report, "markdown"))
    return 0


COMMANDS = {
    "sizes": cmd_sizes,
    "search": cmd_search,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
    "experiment": cmd_experiment,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging(-1 if args.quiet else args.verbose)
    try:
        return COMMANDS[args.verb](args)
    except SpecError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MemClfError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
