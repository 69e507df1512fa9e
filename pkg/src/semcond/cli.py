"""Command line interface.

Subcommands: compile, infer, loss, eval, toytrain, fit.  Exit codes are
0 on success, 1 for usage errors, 2 for invalid input (bad files, cyclic
graphs, inconsistent labels, dimension mismatches), 3 for numeric failures
such as diverging training runs.  Outputs are deterministic: identical
inputs and flags produce byte-identical files and stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import pathlib
import sys

import numpy as np

from .compiler import CompiledKnowledge, compile_hex, load_knowledge, save_knowledge
from .data import (
    Dataset,
    join_dataset,
    read_activations_csv,
    read_labels_csv,
    read_points_csv,
    validate_labels,
    write_csv,
    write_json,
)
from .errors import InputError, NumericError, UnattainableAccuracyError
from .hexgraph import derive_exclusions, hex_from_dict, prune_pass_through, sparsify_hierarchy
from .inference import (
    knowledge_entails,
    knowledge_k,
    knowledge_log_pqe_batch,
    knowledge_marginals_batch,
    predict_imc,
    predict_sci,
)
from .logic import parse_formula
from .losses import loss_imc_batch, loss_sc_batch, loss_sr_batch
from .scaling import asymptotic_gain, fit_report, savings_curve
from .training import ToyConfig, run_toy_study


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_json_file(path) -> dict:
    try:
        payload = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError(f"{path}: expected a JSON object")
    return payload


def _load_any_knowledge(path):
    """Accept a compiled artifact, a raw HEX JSON, or a formula JSON."""
    payload = _read_json_file(path)
    if payload.get("format"):
        return load_knowledge(path)
    if "nodes" in payload:
        return compile_hex(hex_from_dict(payload))
    if "formula" in payload:
        names = payload.get("names")
        return parse_formula(
            str(payload["formula"]), int(payload["k"]), tuple(names) if names else None
        )
    raise InputError(
        f"{path}: expected a knowledge artifact, a HEX graph (with 'nodes') "
        "or a formula object (with 'formula' and 'k')"
    )


def _load_dataset(kn, activations_path, labels_path=None) -> Dataset:
    ids, acts = read_activations_csv(activations_path)
    k = knowledge_k(kn)
    if acts.shape[0] == 0:
        raise InputError(f"{activations_path}: no data rows")
    if acts.shape[1] != k:
        raise InputError(
            f"{activations_path}: {acts.shape[1]} activation columns for a "
            f"{k}-variable constraint"
        )
    if labels_path is None:
        return join_dataset(ids, acts)
    lids, labels = read_labels_csv(labels_path)
    return join_dataset(ids, acts, lids, labels)


def _figure_paths(out_path, suffix: str) -> pathlib.Path:
    out = pathlib.Path(out_path)
    return out.parent / (out.stem + suffix)


# -- subcommands --------------------------------------------------------------


def cmd_compile(args) -> None:
    payload = _read_json_file(args.knowledge)
    if payload.get("format"):
        raise InputError(f"{args.knowledge} is already a compiled artifact")
    transforms = args.prune or args.derive_exclusions or args.sparsify
    if "nodes" in payload:
        graph = hex_from_dict(payload)
        if args.prune:
            graph = prune_pass_through(graph)
        if args.derive_exclusions:
            graph = derive_exclusions(graph)
        if args.sparsify:
            graph = sparsify_hierarchy(graph)
        compiled = compile_hex(graph)
        save_knowledge(compiled, args.output)
        print(
            f"compiled HEX graph: {compiled.k} variables, "
            f"{len(compiled.cliques)} cliques, largest {compiled.max_clique_size}"
        )
    elif "formula" in payload:
        if transforms:
            raise InputError("graph transforms only apply to HEX inputs")
        names = payload.get("names")
        formula = parse_formula(
            str(payload["formula"]), int(payload["k"]), tuple(names) if names else None
        )
        save_knowledge(formula, args.output)
        print(f"stored formula over {formula.k} variables (enumeration path)")
    else:
        raise InputError(f"{args.knowledge}: neither a HEX graph nor a formula object")
    print(f"wrote {args.output}")


def cmd_infer(args) -> None:
    kn = _load_any_knowledge(args.knowledge)
    dataset = _load_dataset(kn, args.activations)
    acts = dataset.activations
    log_pqe = knowledge_log_pqe_batch(kn, acts)
    marginals = knowledge_marginals_batch(kn, acts)
    rows = []
    for i, row_id in enumerate(dataset.ids):
        if args.mode == "sci":
            pred = predict_sci(kn, acts[i])
        else:
            pred = predict_imc(acts[i])
        rows.append(
            {
                "id": row_id,
                "prediction": [int(v) for v in pred],
                "log_pqe": float(log_pqe[i]),
                "marginals": [float(v) for v in marginals[i]],
            }
        )
    payload = {"mode": args.mode, "k": knowledge_k(kn), "rows": rows}
    write_json(args.output, payload)
    print(f"wrote {args.output} ({len(rows)} rows, mode {args.mode})")


def cmd_loss(args) -> None:
    kn = _load_any_knowledge(args.knowledge)
    dataset = _load_dataset(kn, args.activations, args.labels)
    acts, labels = dataset.activations, dataset.labels
    if args.technique == "imc":
        values, grads = loss_imc_batch(acts, labels)
        weight = None
    elif args.technique == "sr":
        weight = args.lam
        values, grads = loss_sr_batch(kn, acts, labels, weight)
    else:  # sc
        validate_labels(kn, dataset)
        weight = None
        values, grads = loss_sc_batch(kn, acts, labels)
    rows = [
        {
            "id": row_id,
            "loss": float(values[i]),
            "gradient": [float(g) for g in grads[i]],
        }
        for i, row_id in enumerate(dataset.ids)
    ]
    payload = {
        "technique": args.technique,
        "lambda": weight,
        "mean_loss": float(values.mean()),
        "rows": rows,
    }
    write_json(args.output, payload)
    print(f"wrote {args.output} (mean {args.technique} loss {values.mean():.6f})")


def cmd_eval(args) -> None:
    kn = _load_any_knowledge(args.knowledge)
    dataset = _load_dataset(kn, args.activations, args.labels)
    validate_labels(kn, dataset)
    acts, labels = dataset.activations, dataset.labels
    pred_imc = np.stack([predict_imc(a) for a in acts])
    pred_sci = np.stack([predict_sci(kn, a) for a in acts])
    n = acts.shape[0]

    def block(preds):
        exact = float((preds == labels).all(axis=1).mean())
        consistent = sum(1 for row in preds if knowledge_entails(kn, row)) / n
        return {"exact_accuracy": exact, "consistency": consistent}

    payload = {"n": n, "imc": block(pred_imc), "sci": block(pred_sci)}
    if args.output:
        write_json(args.output, payload)
        print(f"wrote {args.output}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def cmd_toytrain(args) -> None:
    kn = _load_any_knowledge(args.knowledge)
    raw = _read_json_file(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        config = ToyConfig.from_dict(raw, k=knowledge_k(kn))
    except TypeError as exc:
        raise InputError(f"bad toy config: {exc}") from exc
    if args.lambdas is not None:
        config = dataclasses.replace(config, weights=tuple(args.lambdas))
    report = run_toy_study(kn, config)
    write_json(args.output, report)
    print(f"wrote {args.output}")
    for entry in report["sweep"]:
        print(
            "lambda {lam:g}: test exact accuracy imc {imc:.4f} sci {sci:.4f}".format(
                lam=entry["lambda"],
                imc=entry["test"]["imc"]["exact_accuracy"],
                sci=entry["test"]["sci"]["exact_accuracy"],
            )
        )
    if not args.no_figures:
        from .figures import save_figure, training_figure

        fig_path = _figure_paths(args.output, "_training.png")
        save_figure(training_figure(report), fig_path)
        print(f"wrote {fig_path}")


def cmd_fit(args) -> None:
    points = read_points_csv(args.points, percent=args.percent)
    reports = {}
    for name in sorted(points):
        reports[name] = fit_report(points[name])
    payload_fits = {
        name: {
            "alpha": rep.model.alpha,
            "b": rep.model.b,
            "a_inf": rep.model.a_inf,
            "residual": rep.residual,
            "converged": rep.converged,
            "n_points": len(points[name]),
        }
        for name, rep in reports.items()
    }
    baseline = args.baseline
    gains = {}
    curves = {}
    skipped = {}
    if baseline in reports:
        base_model = reports[baseline].model
        all_ms = [p.m for pts in points.values() for p in pts]
        grid = np.geomspace(min(all_ms), max(all_ms), args.samples)
        for name, rep in reports.items():
            if name == baseline:
                continue
            gains[name] = asymptotic_gain(rep.model, base_model)
            try:
                curves[name] = savings_curve(rep.model, base_model, grid)
            except (ValueError, UnattainableAccuracyError) as exc:
                skipped[name] = str(exc)
    payload = {
        "baseline": baseline if baseline in reports else None,
        "fits": payload_fits,
        "asymptotic_gains": gains,
        "savings_skipped": skipped,
    }
    write_json(args.output, payload)
    print(f"wrote {args.output}")
    csv_path = _figure_paths(args.output, "_savings.csv")
    rows = [
        (name, f"{m!r}", f"{eps!r}", f"{tau!r}")
        for name in sorted(curves)
        for (m, eps, tau) in curves[name]
    ]
    write_csv(csv_path, ["technique", "m", "epsilon", "tau"], rows)
    print(f"wrote {csv_path}")
    if not args.no_figures:
        from .figures import fit_figure, save_figure, savings_figure

        fit_png = _figure_paths(args.output, "_fit.png")
        save_figure(fit_figure(points, {n: r.model for n, r in reports.items()}), fit_png)
        print(f"wrote {fit_png}")
        if curves:
            sav_png = _figure_paths(args.output, "_savings.png")
            save_figure(savings_figure(curves), sav_png)
            print(f"wrote {sav_png}")


# -- wiring -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="semcond",
        description="Exact constraint-aware inference, losses, and scaling analysis",
    )
    parser.add_argument("--seed", type=int, default=None,
                        help="override the seed used by seeded commands")
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for interface stability; the engine is single-threaded")
    parser.add_argument("--percent", action="store_true",
                        help="accuracy columns in input files are percentages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a HEX graph or formula into an artifact")
    p.add_argument("knowledge", help="HEX graph JSON or formula JSON")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--prune", action="store_true",
                   help="remove pass-through hierarchy nodes first")
    p.add_argument("--derive-exclusions", action="store_true",
                   help="add exclusions between provably disjoint subtrees")
    p.add_argument("--sparsify", action="store_true",
                   help="reduce the hierarchy to its transitive reduction")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("infer", help="predictions, log P(constraint|a), marginals")
    p.add_argument("knowledge")
    p.add_argument("activations", help="CSV with header id,a1,...,ak")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mode", choices=("imc", "sci"), default="sci")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("loss", help="per-row loss values and activation gradients")
    p.add_argument("knowledge")
    p.add_argument("activations")
    p.add_argument("labels", help="CSV with header id,y1,...,yk")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--technique", choices=("imc", "sr", "sc"), required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="regularization weight for --technique sr")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("eval", help="exact accuracy and consistency of both decoders")
    p.add_argument("knowledge")
    p.add_argument("activations")
    p.add_argument("labels")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("toytrain", help="train the toy linear model across weights")
    p.add_argument("knowledge")
    p.add_argument("config", help="JSON config (d, n_train, seed, epochs, ...)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--lambdas", type=float, nargs="+", default=None,
                   help="override the regularization weight sweep")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_toytrain)

    p = sub.add_parser("fit", help="fit scaling curves and report savings")
    p.add_argument("points", help="CSV with header technique,m,accuracy")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--baseline", default="imc")
    p.add_argument("--samples", type=int, default=25,
                   help="grid size for the savings curve")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        code = exc.code
        return 0 if code in (0, None) else int(code)
    try:
        args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
