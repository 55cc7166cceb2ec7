"""Command-line interface for Class2Simi

Subcommands:
- gen-data, corrupt          synthetic blobs and label corruption (CSV)
- make-matrix                noise matrices in the plain-text matrix format
- transform-matrix           T_c -> T_s with noise rates and learnability
- estimate-tc                anchor-point estimate from a checkpoint and a pool
- train, robustness          experiments (JSON report / CSV table)
- verify                     the transform property suite

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
import argparse
import copy
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

from .components.estimation import estimate_tc_anchor, estimation_error
from .components.model import load_checkpoint
from .components.noise import (
    corrupt_labels,
    csv_schema_for,
    csv_text,
    generate_blobs,
    load_csv,
    noise_report,
)
from .errors import Class2SimiException, ConfigError
from .logging_utils import configure_logging
from .pipeline import ROBUSTNESS_LEVELS, Class2SimiPipeline, robustness_csv, run_matrix_robustness
from .schemas import ExperimentConfig
from .settings import get_settings
from .transition import ClassPrior, make_noise_matrix, matrix_text, read_matrix, transform_report
from .verification import DEFAULT_RHO_RANGE, verify_theorems

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent / "config.yaml"


class UsageError(Exception):
    pass


class Class2SimiArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with code 1 instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ============================================================================
# Configuration loading
# ============================================================================

def load_config_dict(path: Optional[Path]) -> Dict[str, Any]:
    """JSON or YAML file; a top-level ``experiment`` key is unwrapped."""
    path = path or DEFAULT_CONFIG_PATH
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data.get("experiment", data)


def _set(tree: Dict[str, Any], dotted: str, value: Any) -> None:
    node = tree
    keys = dotted.split(".")
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def apply_overrides(data: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Flag values win over file values; absent flags leave the file untouched."""
    data = copy.deepcopy(data)
    settings = get_settings()
    data.setdefault("train", {}).setdefault("probability_clamp", settings.PROBABILITY_CLAMP)

    if getattr(args, "dataset_csv", None) is not None:
        data["dataset"] = {"csv": {"path": args.dataset_csv}}
        if args.test_csv is not None:
            data["dataset"]["csv"]["test_path"] = args.test_csv
    if getattr(args, "noise_matrix", None) is not None:
        data["noise"] = {"matrix_path": args.noise_matrix}
    elif getattr(args, "noise_kind", None) is not None:
        data["noise"] = {"kind": args.noise_kind}
        if args.noise_rate is not None:
            data["noise"]["rate"] = args.noise_rate
    elif getattr(args, "noise_rate", None) is not None:
        _set(data, "noise.rate", args.noise_rate)

    mapping = {
        "method": "method",
        "tc_source": "tc_source",
        "perturb_level": "perturb_level",
        "perturb_mode": "perturb_mode",
        "percentile": "anchor_percentile",
        "epochs": "train.epochs",
        "stage2_epochs": "stage2_epochs",
        "lr": "train.learning_rate",
        "batch_size": "train.batch_size",
        "hidden": "model.hidden",
        "activation": "model.activation",
    }
    for attr, dotted in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            _set(data, dotted, value)
    if getattr(args, "seed", None) is not None:
        _set(data, "seed", args.seed)
        _set(data, "train.seed", args.seed)
    if getattr(args, "cold_start", False):
        data["warm_start"] = False
    return data


def build_config(args: argparse.Namespace) -> Tuple[ExperimentConfig, Optional[Path]]:
    path = Path(args.config) if args.config else None
    data = apply_overrides(load_config_dict(path), args)
    base_dir = path.parent if path is not None else Path.cwd()
    return ExperimentConfig.model_validate(data), base_dir


# ============================================================================
# Output
# ============================================================================

def emit(args: argparse.Namespace, text: str, summary: str) -> None:
    """Write ``text`` to --output (or stdout); --quiet prints ``summary`` instead of stdout text."""
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    if args.quiet:
        print(summary)
    elif not args.output:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _float_list(raw: str) -> List[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}")


def _int_list(raw: str) -> List[int]:
    try:
        return [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")


# ============================================================================
# Commands
# ============================================================================

def cmd_gen_data(args: argparse.Namespace) -> int:
    ds = generate_blobs(args.c, args.per_class, args.d, args.separation, args.spread, args.seed)
    emit(args, csv_text(ds), f"gen-data: {ds.n} rows, c={ds.c}, d={ds.d}")
    return 0


def _noise_matrix(args: argparse.Namespace, c: int):
    if args.matrix is not None:
        return read_matrix(args.matrix)
    if args.noise_kind is None:
        raise ConfigError("noise", "give --matrix or --noise-kind")
    return make_noise_matrix(args.noise_kind, c, args.noise_rate or 0.0)


def cmd_corrupt(args: argparse.Namespace) -> int:
    ds = load_csv(args.input, csv_schema_for(args.input))
    Tc = _noise_matrix(args, ds.c)
    noisy = corrupt_labels(ds, Tc, seed=args.seed)
    rates = noise_report(noisy, Tc, max_pairs=200_000, seed=args.seed)
    emit(args, csv_text(noisy), "corrupt: " + " ".join(f"{k}={v:.6f}" for k, v in sorted(rates.items())))
    logger.info(f"Noise rates: {rates}")
    return 0


def cmd_make_matrix(args: argparse.Namespace) -> int:
    Tc = make_noise_matrix(args.kind, args.c, args.rate)
    emit(args, matrix_text(Tc), f"make-matrix: {args.kind} c={args.c} rate={args.rate}")
    return 0


def cmd_transform_matrix(args: argparse.Namespace) -> int:
    Tc = read_matrix(args.matrix)
    prior = ClassPrior.from_counts(_float_list(args.prior)) if args.prior else None
    report = transform_report(Tc, prior)
    summary = (
        f"transform-matrix: c={report['c']} T_s={report['ts']} "
        f"class_noise_rate={report['class_noise_rate']:.6f} simi_noise_rate={report['simi_noise_rate']:.6f}"
    )
    emit(args, to_json(report), summary)
    return 0


def cmd_estimate_tc(args: argparse.Namespace) -> int:
    model = load_checkpoint(args.checkpoint)
    ds = load_csv(args.input, csv_schema_for(args.input))
    Tc_hat = estimate_tc_anchor(model, ds.features, args.percentile)
    summary = f"estimate-tc: c={Tc_hat.c} percentile={args.percentile}"
    if args.true_matrix:
        summary += f" max_abs_error={estimation_error(Tc_hat, read_matrix(args.true_matrix)):.6f}"
    emit(args, matrix_text(Tc_hat), summary)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config, base_dir = build_config(args)
    save_dir = args.save_dir or get_settings().OUTPUT_DIR
    pipeline = Class2SimiPipeline(config, base_dir=base_dir, save_dir=save_dir)
    if args.checkpoint:
        pipeline.load_stage1(args.checkpoint)
    report = pipeline.run_experiment()
    emit(args, to_json(report.model_dump(mode="json")), report.summary())
    return 0


def cmd_robustness(args: argparse.Namespace) -> int:
    config, base_dir = build_config(args)
    levels = args.levels if args.levels is not None else list(ROBUSTNESS_LEVELS)
    rows = run_matrix_robustness(config, levels, seeds=args.seeds, base_dir=base_dir)
    by_method: Dict[str, List[float]] = {}
    for row in rows:
        if row.accuracy is not None:
            by_method.setdefault(f"{row.method.value}@{row.level}", []).append(row.accuracy)
    summary = "robustness: " + " ".join(f"{k}={np.mean(v):.4f}" for k, v in by_method.items())
    emit(args, robustness_csv(rows), summary)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    report = verify_theorems(
        c_range=range(args.c_min, args.c_max + 1),
        rho_range=args.rhos if args.rhos is not None else DEFAULT_RHO_RANGE,
        trials=args.trials,
        seed=args.seed,
        n_matrices=args.n_matrices,
        mc_pairs=args.mc_pairs,
    )
    payload = report.model_dump(mode="json")
    payload["all_passed"] = report.all_passed
    emit(args, to_json(payload), report.summary())
    return 0 if report.all_passed else 2


# ============================================================================
# Parser
# ============================================================================

def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or YAML experiment config (default: packaged config.yaml)")
    p.add_argument("--method", choices=["ce", "forward", "reweight", "f_class2simi", "r_class2simi"])
    p.add_argument("--tc-source", dest="tc_source", choices=["true", "estimated", "perturbed"])
    p.add_argument("--perturb-level", dest="perturb_level", type=float)
    p.add_argument("--perturb-mode", dest="perturb_mode", choices=["deviation", "multiplier"])
    p.add_argument("--percentile", type=float, help="anchor percentile in (0, 100]")
    p.add_argument("--dataset-csv", dest="dataset_csv")
    p.add_argument("--test-csv", dest="test_csv")
    p.add_argument("--noise-kind", dest="noise_kind", choices=["symmetric", "asymmetric", "identity"])
    p.add_argument("--noise-rate", dest="noise_rate", type=float)
    p.add_argument("--noise-matrix", dest="noise_matrix")
    p.add_argument("--epochs", type=int)
    p.add_argument("--stage2-epochs", dest="stage2_epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--hidden", type=_int_list, help="comma-separated hidden widths")
    p.add_argument("--activation", choices=["relu", "softsign"])
    p.add_argument("--seed", type=int)
    p.add_argument("--cold-start", dest="cold_start", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    common = Class2SimiArgumentParser(add_help=False)
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="print a one-line summary")
    common.add_argument("--log-level", dest="log_level", default=None)

    parser = Class2SimiArgumentParser(prog="class2simi", description="Learning with noisy labels via pairwise similarity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate Gaussian blobs as CSV")
    p.add_argument("--c", type=int, default=10)
    p.add_argument("--per-class", dest="per_class", type=int, default=200)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--spread", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("corrupt", parents=[common], help="add a noisy_label column to a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--matrix")
    p.add_argument("--noise-kind", dest="noise_kind", choices=["symmetric", "asymmetric", "identity"])
    p.add_argument("--noise-rate", dest="noise_rate", type=float)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("make-matrix", parents=[common], help="write a noise transition matrix")
    p.add_argument("--kind", required=True, choices=["symmetric", "asymmetric", "identity"])
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.set_defaults(func=cmd_make_matrix)

    p = sub.add_parser("transform-matrix", parents=[common], help="class -> similarity transition matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--prior", help="comma-separated class counts or probabilities")
    p.set_defaults(func=cmd_transform_matrix)

    p = sub.add_parser("estimate-tc", parents=[common], help="anchor-point estimate of T_c")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--percentile", type=float, default=97.0)
    p.add_argument("--true-matrix", dest="true_matrix")
    p.set_defaults(func=cmd_estimate_tc)

    p = sub.add_parser("train", parents=[common], help="run one experiment")
    _experiment_flags(p)
    p.add_argument("--save-dir", dest="save_dir")
    p.add_argument("--checkpoint", help="Stage-1 checkpoint to start from instead of training one")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("robustness", parents=[common], help="Forward vs F-Class2Simi under a perturbed T_c")
    _experiment_flags(p)
    p.add_argument("--levels", type=_float_list)
    p.add_argument("--seeds", type=_int_list)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("verify", parents=[common], help="run the transition-matrix property suite")
    p.add_argument("--c-min", dest="c_min", type=int, default=2)
    p.add_argument("--c-max", dest="c_max", type=int, default=50)
    p.add_argument("--rhos", type=_float_list)
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--n-matrices", dest="n_matrices", type=int, default=100)
    p.add_argument("--mc-pairs", dest="mc_pairs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.set_defaults(func=cmd_verify)
    return parser


def _error_payload(code: str, message: str, details: Optional[list] = None) -> str:
    return json.dumps({"error": {"code": code, "message": message, "details": details or []}})


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    configure_logging(args.log_level or get_settings().LOG_LEVEL)
    try:
        return args.func(args)
    except ValidationError as exc:
        details = [{"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]} for err in exc.errors()]
        fields = ", ".join(d["field"] or "config" for d in details)
        print(_error_payload("INVALID_CONFIG", f"invalid configuration: {fields}", details), file=sys.stderr)
        return 1
    except Class2SimiException as exc:
        print(json.dumps({"error": exc.to_dict()}), file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(_error_payload("VALIDATION_ERROR", str(exc)), file=sys.stderr)
        return 1
    except Exception as exc:
        logger.exception("Unexpected error")
        print(_error_payload("INTERNAL_ERROR", str(exc)), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
