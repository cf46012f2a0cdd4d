"""Command-line interface: ``oodot {calibrate,estimate,costs,evaluate,synth}``.

Exit codes: 0 on success, 2 for usage errors and missing inputs, 3 for
malformed data files.
"""

from __future__ import annotations

import argparse
import glob
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import estimators as est
from . import files, shiftlab
from .calibration import fit_temperature
from .core import Estimate, Kind, LabelMarginal, Method, PredictionSet, label_marginal, to_probabilities
from .ot import w_inf

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

METHODS = {
    "ac": Method.AC,
    "doc": Method.DOC,
    "im": Method.IM,
    "gde": Method.GDE,
    "atc-mc": Method.ATC_MC,
    "atc-ne": Method.ATC_NE,
    "cot": Method.COT,
    "cott": Method.COTT,
}
NEEDS_VAL = {Method.DOC, Method.IM, Method.ATC_MC, Method.ATC_NE, Method.COTT}
BATCHED = {Method.COT, Method.COTT}
EVAL_HEADER = ("file", "true_error", "estimate", "abs_err")


class UsageError(Exception):
    pass


@dataclass
class _Inputs:
    method: Method
    kind: Kind
    temperature: Optional[float]
    val: Optional[PredictionSet] = None
    marginal: Optional[LabelMarginal] = None


def _kind(args) -> Kind:
    return Kind.LOGITS if args.logits else Kind.PROBABILITIES


def _require_file(path, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return p


def _load(path, flag: str, kind: Kind, temperature: Optional[float]) -> PredictionSet:
    p = files.parse_predictions(_require_file(path, flag), kind)
    try:
        return to_probabilities(p, 1.0 if temperature is None else temperature)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _method(name: str) -> Method:
    try:
        return METHODS[name.lower()]
    except KeyError:
        raise UsageError(f"--method must be one of {', '.join(METHODS)}") from None


def _prepare(args) -> _Inputs:
    """Load the validation set and source marginal a method needs, once."""
    method = _method(args.method)
    inputs = _Inputs(method, _kind(args), args.temperature)
    if args.temperature is not None and not args.logits:
        raise UsageError("--temperature applies to --logits inputs only")
    if method in NEEDS_VAL:
        inputs.val = _load(args.val, "--val", inputs.kind, args.temperature)
        if inputs.val.labels is None:
            raise UsageError(f"--val file must have a label column for {method.value}")
    if method in BATCHED:
        if args.source_marginal is not None:
            inputs.marginal = files.parse_marginal(_require_file(args.source_marginal, "--source-marginal"))
        elif args.val is not None:
            if inputs.val is None:
                inputs.val = _load(args.val, "--val", inputs.kind, args.temperature)
            if inputs.val.labels is None:
                raise UsageError("--val file needs labels to derive the source marginal")
            inputs.marginal = label_marginal(inputs.val)
        else:
            raise UsageError(f"{method.value} needs --source-marginal or a labeled --val")
    return inputs


def _estimator(args, inputs: _Inputs) -> tuple[Callable[..., Estimate], Optional[float]]:
    """Return ``fn(target, second) -> Estimate`` plus the fitted threshold, if any."""
    m, val, marginal = inputs.method, inputs.val, inputs.marginal
    plan_for = lambda n: est.BatchPlan.for_size(n, args.batch_max, args.seed)  # noqa: E731
    if m is Method.AC:
        return (lambda p, q=None: est.ac_mc(p)), None
    if m is Method.DOC:
        return (lambda p, q=None: est.doc(p, val)), None
    if m is Method.IM:
        return (lambda p, q=None: est.im(p, val, args.bins)), None
    if m is Method.GDE:
        return (lambda p, q: est.gde(p, q)), None
    if m in (Method.ATC_MC, Method.ATC_NE):
        kind = "MC" if m is Method.ATC_MC else "NE"
        th = est.atc_fit(val, kind)
        return (lambda p, q=None: est.atc(p, th, kind)), th.value
    if m is Method.COT:
        return (lambda p, q=None: est.batched(lambda b: est.cot(b, marginal), p, plan_for(p.n))), None
    th = est.cott_fit(val, marginal)
    return (lambda p, q=None: est.batched(lambda b: est.cott(b, th, marginal), p, plan_for(p.n))), th.value


def _check_k(p: PredictionSet, inputs: _Inputs, what: str) -> None:
    for other, name in ((inputs.val, "--val"), (inputs.marginal, "source marginal")):
        if other is not None and other.k != p.k:
            raise UsageError(f"{what} has {p.k} classes but {name} has {other.k}")


def cmd_calibrate(args, out) -> int:
    if not args.logits:
        raise UsageError("calibrate needs --logits input")
    p = files.parse_predictions(_require_file(args.val, "--val"), Kind.LOGITS)
    if p.labels is None:
        raise UsageError("--val file must have a label column")
    fit = fit_temperature(p)
    report = {"temperature": fit.temperature, "nll": fit.nll, "clamped": fit.clamped,
              "iterations": fit.iterations}
    files.write_text(files.to_json(report), args.out, out)
    return EXIT_OK


def cmd_estimate(args, out) -> int:
    start = time.perf_counter()
    inputs = _prepare(args)
    target = _load(args.target, "--target", inputs.kind, args.temperature)
    _check_k(target, inputs, "--target")
    second = None
    if inputs.method is Method.GDE:
        second = _load(args.second, "--second", inputs.kind, args.temperature)
    fn, threshold = _estimator(args, inputs)
    try:
        e = fn(target, second)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    elapsed = None if args.no_timing else round((time.perf_counter() - start) * 1000.0, 3)
    report = {
        "method": e.method.value,
        "value": e.value,
        "n": e.n,
        "k": e.k,
        "batch_count": e.batch_count,
        "seed": args.seed if inputs.method in BATCHED else None,
        "temperature": args.temperature,
        "threshold": threshold,
        "elapsed_ms": elapsed,
    }
    files.write_text(files.to_json(report), args.out, out)
    return EXIT_OK


def cmd_costs(args, out) -> int:
    if args.temperature is not None and not args.logits:
        raise UsageError("--temperature applies to --logits inputs only")
    target = _load(args.target, "--target", _kind(args), args.temperature)
    marginal = files.parse_marginal(_require_file(args.source_marginal, "--source-marginal"))
    if marginal.k != target.k:
        raise UsageError(f"--target has {target.k} classes but the marginal has {marginal.k}")
    res = w_inf(target, marginal)
    rows = ({"row_index": i, "cost": float(res.per_sample_costs[i]),
             "assigned_class": int(res.assignment[i])} for i in range(target.n))
    text = files.format_rows_csv(("row_index", "cost", "assigned_class"), rows)
    files.write_text(text, args.out, out)
    return EXIT_OK


def _worker_count(jobs: int) -> int:
    return max(1, min(jobs, est._worker_cap()))


def evaluate_files(paths, estimate_one: Callable[[Path], tuple[float, float]]) -> tuple[list[dict], float]:
    """Run ``estimate_one(path) -> (true_error, estimate)`` over files sorted by name.

    Returns per-file rows and the mean absolute error.
    """
    paths = sorted(str(p) for p in paths)
    workers = _worker_count(len(paths))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: estimate_one(Path(p)), paths))
    else:
        results = [estimate_one(Path(p)) for p in paths]
    rows = []
    for path, (truth, value) in zip(paths, results):
        rows.append({"file": path, "true_error": truth, "estimate": value, "abs_err": abs(truth - value)})
    mae = math.fsum(r["abs_err"] for r in rows) / len(rows)
    return rows, mae


def cmd_evaluate(args, out) -> int:
    paths = sorted(p for p in glob.glob(args.targets) if Path(p).is_file())
    if not paths:
        raise UsageError(f"--targets matched no files: {args.targets}")
    inputs = _prepare(args)
    if inputs.method is Method.GDE and args.second_dir is None:
        raise UsageError("gde needs --second-dir holding the second model's files")
    fn, threshold = _estimator(args, inputs)

    def one(path: Path):
        target = _load(path, "--targets", inputs.kind, args.temperature)
        if target.labels is None:
            raise UsageError(f"{path}: evaluate needs a label column in every target file")
        _check_k(target, inputs, str(path))
        second = None
        if inputs.method is Method.GDE:
            second = _load(Path(args.second_dir) / path.name, "--second-dir", inputs.kind, args.temperature)
        return est.true_error(target), fn(target, second).value

    rows, mae = evaluate_files(paths, one)
    Path(args.out).write_text(files.format_rows_csv(EVAL_HEADER, rows), encoding="utf-8")
    summary = {"method": inputs.method.value, "n_files": len(rows), "mae": mae, "threshold": threshold}
    out.write(files.to_json(summary))
    return EXIT_OK


def _marginal_arg(path, k: Optional[int], flag: str) -> LabelMarginal:
    if path is not None:
        return files.parse_marginal(_require_file(path, flag))
    if k is None:
        raise UsageError(f"give {flag} or --k")
    return LabelMarginal.uniform(k)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_synth(args, out) -> int:
    what = args.what
    if what == "dirichlet":
        base = _marginal_arg(args.base, args.k, "--base")
        text = files.format_marginal(shiftlab.dirichlet_shift(base, args.alpha, args.seed))
    elif what == "tightness":
        pseudo = files.parse_marginal(_require_file(args.pseudo, "--pseudo"))
        target = files.parse_marginal(_require_file(args.target, "--target"))
        text = files.format_predictions(shiftlab.tightness_family(pseudo, target, args.delta, args.n))
    elif what == "classifier":
        marginal = _marginal_arg(args.marginal, args.k, "--marginal")
        scen = shiftlab.synth_classifier(marginal.k, args.n, args.error, args.confidence, marginal, args.seed)
        text = files.format_predictions(scen.predictions)
    elif what == "resample":
        p = files.parse_predictions(_require_file(args.predictions, "--predictions"), _kind(args))
        target = files.parse_marginal(_require_file(args.target, "--target"))
        text = files.format_predictions(shiftlab.resample_to_marginal(p, target, args.n_out, args.seed))
    else:
        config = shiftlab.SweepConfig(
            errors=_floats(args.errors),
            confidences=_floats(args.confidences),
            shifts=_floats(args.shifts),
            k=args.k,
            n=args.n,
            val_error=args.val_error,
        )
        text = shiftlab.sweep_csv(shiftlab.sweep(config, args.seed))
    files.write_text(text, args.out, out)
    return EXIT_OK


def _kind_flags(parser, required: bool = True) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--probs", action="store_true", help="files hold probabilities")
    group.add_argument("--logits", action="store_true", help="files hold logits")


def _method_flags(parser) -> None:
    parser.add_argument("--method", required=True, help=", ".join(METHODS))
    parser.add_argument("--val", help="labeled validation predictions")
    parser.add_argument("--source-marginal", help="class,mass CSV for COT/COTT")
    parser.add_argument("--temperature", type=float, help="divide logits by T before softmax")
    parser.add_argument("--batch-max", type=int, default=est.DEFAULT_BATCH_MAX)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bins", type=int, default=10, help="IM confidence bins")
    _kind_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodot", description="Predict classifier error on unlabeled shifted data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit a softmax temperature on validation logits")
    p.add_argument("--val", required=True)
    p.add_argument("--out")
    _kind_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", help="estimate the error on one target file")
    p.add_argument("--target", required=True)
    p.add_argument("--second", help="second model's predictions (gde)")
    p.add_argument("--out")
    p.add_argument("--no-timing", action="store_true", help="report elapsed_ms as null")
    _method_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("costs", help="per-sample optimal transport costs")
    p.add_argument("--target", required=True)
    p.add_argument("--source-marginal", required=True)
    p.add_argument("--temperature", type=float)
    p.add_argument("--out")
    _kind_flags(p)
    p.set_defaults(func=cmd_costs)

    p = sub.add_parser("evaluate", help="MAE of an estimator over labeled target files")
    p.add_argument("--targets", required=True, help="glob pattern")
    p.add_argument("--labels-required", action="store_true",
                   help="accepted for explicitness; target labels are always required")
    p.add_argument("--second-dir", help="directory of second-model files with matching names (gde)")
    p.add_argument("--out", required=True, help="per-file CSV")
    _method_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="synthetic scenarios")
    synth = p.add_subparsers(dest="what", required=True)

    q = synth.add_parser("dirichlet", help="Dirichlet label-shift draw")
    q.add_argument("--base", help="class,mass CSV (default uniform over --k)")
    q.add_argument("--k", type=int)
    q.add_argument("--alpha", type=float, default=50.0)

    q = synth.add_parser("tightness", help="confidence rows approaching half the pseudo-label shift")
    q.add_argument("--pseudo", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--n", type=int, required=True)

    q = synth.add_parser("classifier", help="labeled predictions with exact error and confidence")
    q.add_argument("--k", type=int)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--error", type=float, required=True)
    q.add_argument("--confidence", type=float, required=True)
    q.add_argument("--marginal", help="class,mass CSV (default uniform over --k)")

    q = synth.add_parser("resample", help="stratified resample to a label marginal")
    q.add_argument("--predictions", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--n-out", type=int, required=True)
    _kind_flags(q)

    q = synth.add_parser("sweep", help="estimator error against pseudo-label shift")
    q.add_argument("--errors", default="0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5")
    q.add_argument("--confidences", default="0.95")
    q.add_argument("--shifts", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    q.add_argument("--k", type=int, default=10)
    q.add_argument("--n", type=int, default=1000)
    q.add_argument("--val-error", type=float, default=0.1)

    for q in synth.choices.values():
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"oodot: error: {exc}\n")
        return EXIT_USAGE
    except files.ParseError as exc:
        err.write(f"oodot: malformed input: {exc}\n")
        return EXIT_DATA
    except ValueError as exc:
        err.write(f"oodot: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
