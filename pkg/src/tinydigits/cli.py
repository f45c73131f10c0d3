"""Command-line entry point.

Thin wrappers over the library: every metric printed here is computed by
the same code paths the API uses, and every random choice flows from an
explicit --seed flag. Exit codes: 0 success, 1 runtime error (missing
files, failed checks), 2 usage error.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from .datasets import (
    CANONICAL_GLYPHS,
    Dataset,
    LabeledImage,
    VariantSpec,
    dataset_load,
    dataset_save,
    glyph_grid,
    make_checkerboard,
    make_digit_dataset,
    make_random_images,
    rebalance_classes,
    replace_class_with_random,
)
from .experiments import (
    DEFAULT_PARAMS,
    ExperimentSpec,
    run_experiment,
)
from .network import (
    LayerSpec,
    NetworkConfig,
    forward,
    model_load,
    model_save,
    network_new,
)
from .rng import seed_roles
from .training import (
    Hyperparams,
    history_load,
    history_save,
    predict,
    split,
    train,
)
from .viz import render_curves, render_diagram


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _unit_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return value


def _open_fraction(text):
    value = _unit_float(text)
    if value in (0.0, 1.0):
        raise argparse.ArgumentTypeError("must be strictly between 0 and 1")
    return value


def _hidden_spec(text):
    """Comma-separated dense layers, each "UNITS" or "UNITS:ACTIVATION"."""
    layers = []
    for part in text.split(","):
        units, _, activation = part.partition(":")
        activation = activation or "relu"
        try:
            units = int(units)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad layer {part!r}")
        if units < 1:
            raise argparse.ArgumentTypeError("layer units must be >= 1")
        if activation not in ("relu", "sigmoid", "linear"):
            raise argparse.ArgumentTypeError(f"bad activation {activation!r}")
        layers.append(LayerSpec("dense", units, activation))
    if not layers:
        raise argparse.ArgumentTypeError("at least one layer required")
    return tuple(layers)


def _image_spec(text):
    """One of: checkerboard[:PHASE], glyph:N, file:PATH, pixels:CSV."""
    kind, _, rest = text.partition(":")
    if kind == "checkerboard":
        phase = rest or "0"
        if phase not in ("0", "1"):
            raise argparse.ArgumentTypeError("checkerboard phase must be 0 or 1")
        return ("checkerboard", int(phase))
    if kind == "glyph":
        if rest not in [str(d) for d in range(10)]:
            raise argparse.ArgumentTypeError("glyph digit must be 0..9")
        return ("glyph", int(rest))
    if kind == "file":
        if not rest:
            raise argparse.ArgumentTypeError("file: needs a path")
        return ("file", rest)
    if kind == "pixels":
        parts = [p for p in rest.split(",") if p != ""]
        if len(parts) != 36:
            raise argparse.ArgumentTypeError(
                f"pixels: needs 36 comma-separated values, got {len(parts)}"
            )
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError("pixels: values must be numbers")
        if any(not (0.0 <= v <= 1.0) or not math.isfinite(v) for v in values):
            raise argparse.ArgumentTypeError("pixel values must be in [0, 1]")
        return ("pixels", values)
    raise argparse.ArgumentTypeError(
        f"unknown image spec {text!r} (use checkerboard, glyph:N, file:PATH, pixels:CSV)"
    )


def _resolve_image(spec):
    kind, value = spec
    if kind == "checkerboard":
        return make_checkerboard(value)
    if kind == "glyph":
        return glyph_grid(value)
    if kind == "pixels":
        return value
    doc = json.loads(Path(value).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "pixels" in doc:
        doc = doc["pixels"]
    if not isinstance(doc, list):
        raise ValueError(f"{value}: expected a JSON array of 36 pixels")
    return tuple(float(v) for v in doc)


def _rebalance_item(text):
    cls, sep, frac = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected CLASS=FRACTION")
    try:
        cls = int(cls)
        frac = float(frac)
    except ValueError:
        raise argparse.ArgumentTypeError("expected CLASS=FRACTION with numbers")
    if not 0.0 < frac <= 1.0:
        raise argparse.ArgumentTypeError("fraction must be in (0, 1]")
    return (cls, frac)


def _seed_range(text):
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected A..B")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("expected integer bounds A..B")
    if hi < lo:
        raise argparse.ArgumentTypeError("range must not be empty")
    return list(range(lo, hi + 1))


def _override_item(text):
    key, sep, value = text.partition("=")
    if not sep or key not in DEFAULT_PARAMS:
        allowed = ", ".join(sorted(DEFAULT_PARAMS))
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY in: {allowed}")
    kind = type(DEFAULT_PARAMS[key])
    try:
        return (key, kind(value))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{key} needs a {kind.__name__} value")


# --- subcommands -------------------------------------------------------------

def _cmd_dataset_gen(args):
    if args.kind == "digits":
        ds = make_digit_dataset(
            CANONICAL_GLYPHS,
            VariantSpec(
                per_class=args.per_class,
                flip_prob=args.flip_prob,
                shift_max=args.shift_max,
                seed=args.seed,
            ),
        )
    else:
        images = make_random_images(args.per_class, args.density, args.seed)
        ds = Dataset(
            "random-images",
            ("random",),
            tuple(LabeledImage(im, 0, "random") for im in images),
        )
    Path(args.out).write_text(dataset_save(ds), encoding="utf-8")
    print(f"wrote {args.out}: {ds.name}, {len(ds.classes)} classes, {len(ds.examples)} examples")
    return 0


def _cmd_dataset_surgery(args):
    ds = dataset_load(Path(args.infile).read_text(encoding="utf-8"))
    if args.replace_class is not None:
        ds = replace_class_with_random(
            ds, args.replace_class, args.new_name, args.density, args.seed
        )
    else:
        ds = rebalance_classes(ds, dict(args.rebalance), args.seed)
    Path(args.out).write_text(dataset_save(ds), encoding="utf-8")
    counts = ",".join(str(c) for c in ds.class_counts())
    print(f"wrote {args.out}: classes {','.join(ds.classes)} counts {counts}")
    return 0


def _cmd_train(args):
    ds = dataset_load(Path(args.dataset).read_text(encoding="utf-8"))
    roles = seed_roles(args.seed)
    split_ds = split(ds, args.split, roles["split"])
    config = NetworkConfig(
        hidden=args.hidden, output_units=len(ds.classes), seed=roles["init"]
    )
    net = network_new(config)
    hp = Hyperparams(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        shuffle_seed=roles["shuffle"],
    )
    history = train(net, split_ds, hp)
    Path(args.out_model).write_text(model_save(net), encoding="utf-8")
    if args.out_history:
        Path(args.out_history).write_text(history_save(history), encoding="utf-8")
    final = history.epochs[-1]
    print(f"train_acc={final.train_acc:.4f} val_acc={final.val_acc:.4f}")
    return 0


def _cmd_predict(args):
    net = model_load(Path(args.model).read_text(encoding="utf-8"))
    if args.classes:
        class_names = args.classes.split(",")
    else:
        class_names = [str(i) for i in range(net.config.output_units)]
    pixels = _resolve_image(args.image)
    pred = predict(net, pixels, class_names)
    top = max(pred.probabilities)
    print(f"class={pred.class_name} p={top:.4f} status={pred.status}")
    if args.diagram:
        svg = render_diagram(forward(net, pixels))
        Path(args.diagram).write_text(svg, encoding="utf-8")
    return 0


def _cmd_experiment(args):
    kind = args.kind.replace("-", "_")
    seeds = args.seeds if args.seeds else [args.seed]
    overrides = dict(args.set or [])
    reports = []
    for seed in seeds:
        spec = ExperimentSpec(kind=kind, seed=seed, overrides=overrides)
        reports.append(run_experiment(spec, args.out_dir))
    if len(reports) == 1:
        report = reports[0]
        for check in report.checks:
            mark = "PASS" if check["passed"] else "FAIL"
            print(f"{check['name']}: {mark} ({check['detail']})")
        print(f"report: {report.run_dir / 'report.json'}")
        return 0 if report.all_passed() else 1
    # Multi-seed sweep: aggregate pass counts per check.
    names = [c["name"] for c in reports[0].checks]
    counts = {
        name: sum(1 for r in reports for c in r.checks if c["name"] == name and c["passed"])
        for name in names
    }
    for name in names:
        print(f"{name}: {counts[name]}/{len(reports)}")
    if kind == "not_digit":
        # "typically" rule: the checkerboard rejection must hold in >= 70%
        # of runs; other checks are informational in sweep mode.
        need = math.ceil(0.7 * len(reports))
        return 0 if counts["checkerboard_not_digit"] >= need else 1
    return 0 if all(r.all_passed() for r in reports) else 1


def _cmd_render_curves(args):
    history = history_load(Path(args.history).read_text(encoding="utf-8"))
    Path(args.out).write_text(render_curves(history), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_render_diagram(args):
    net = model_load(Path(args.model).read_text(encoding="utf-8"))
    pixels = _resolve_image(args.input)
    svg = render_diagram(forward(net, pixels))
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=args.state_dir, cors_origin=args.cors_origin,
                     ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tinydigits",
        description="Tiny neural-network toolkit for 6x6 digit classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dataset = sub.add_parser("dataset", help="generate or modify datasets")
    dataset_sub = p_dataset.add_subparsers(dest="dataset_command", required=True)

    p_gen = dataset_sub.add_parser("gen", help="generate a dataset")
    p_gen.add_argument("--kind", choices=["digits", "random"], default="digits")
    p_gen.add_argument("--per-class", type=_positive_int, default=20)
    p_gen.add_argument("--flip-prob", type=_unit_float, default=0.10)
    p_gen.add_argument("--shift-max", type=_nonneg_int, choices=[0, 1], default=0)
    p_gen.add_argument("--density", type=_unit_float, default=0.5)
    p_gen.add_argument("--seed", type=_nonneg_int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_dataset_gen)

    p_surgery = dataset_sub.add_parser("surgery", help="replace or rebalance classes")
    p_surgery.add_argument("--in", dest="infile", required=True)
    group = p_surgery.add_mutually_exclusive_group(required=True)
    group.add_argument("--replace-class", type=_nonneg_int)
    group.add_argument("--rebalance", type=_rebalance_item, action="append",
                       metavar="CLASS=FRAC")
    p_surgery.add_argument("--new-name", default="not-a-digit")
    p_surgery.add_argument("--density", type=_unit_float, default=0.5)
    p_surgery.add_argument("--seed", type=_nonneg_int, default=0)
    p_surgery.add_argument("--out", required=True)
    p_surgery.set_defaults(func=_cmd_dataset_surgery)

    p_train = sub.add_parser("train", help="split, initialize, and train a model")
    p_train.add_argument("--dataset", required=True)
    p_train.add_argument("--hidden", type=_hidden_spec,
                         default=(LayerSpec("dense", 20, "relu"),),
                         metavar="UNITS[:ACT][,...]")
    p_train.add_argument("--lr", type=_positive_float, default=0.1)
    p_train.add_argument("--epochs", type=_positive_int, default=500)
    p_train.add_argument("--batch", type=_positive_int, default=16)
    p_train.add_argument("--split", type=_open_fraction, default=0.8)
    p_train.add_argument("--seed", type=_nonneg_int, default=0)
    p_train.add_argument("--out-model", required=True)
    p_train.add_argument("--out-history")
    p_train.set_defaults(func=_cmd_train)

    p_predict = sub.add_parser("predict", help="classify an image with a saved model")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--image", type=_image_spec, required=True,
                           metavar="checkerboard|glyph:N|file:PATH|pixels:CSV")
    p_predict.add_argument("--classes", help="comma-separated class names")
    p_predict.add_argument("--diagram", help="write the activation diagram SVG here")
    p_predict.set_defaults(func=_cmd_predict)

    p_exp = sub.add_parser("experiment", help="run a scripted experiment pipeline")
    p_exp.add_argument("kind", choices=["basic", "not-digit", "imbalance"])
    seed_group = p_exp.add_mutually_exclusive_group()
    seed_group.add_argument("--seed", type=_nonneg_int, default=42)
    seed_group.add_argument("--seeds", type=_seed_range, metavar="A..B")
    p_exp.add_argument("--out-dir", default="runs")
    p_exp.add_argument("--set", type=_override_item, action="append",
                       metavar="KEY=VALUE", help="override a pipeline parameter")
    p_exp.set_defaults(func=_cmd_experiment)

    p_render = sub.add_parser("render", help="render figures from saved documents")
    render_sub = p_render.add_subparsers(dest="render_command", required=True)
    p_curves = render_sub.add_parser("curves")
    p_curves.add_argument("--history", required=True)
    p_curves.add_argument("--out", required=True)
    p_curves.set_defaults(func=_cmd_render_curves)
    p_diagram = render_sub.add_parser("diagram")
    p_diagram.add_argument("--model", required=True)
    p_diagram.add_argument("--input", type=_image_spec, required=True,
                           metavar="checkerboard|glyph:N|file:PATH|pixels:CSV")
    p_diagram.add_argument("--out", required=True)
    p_diagram.set_defaults(func=_cmd_render_diagram)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=_positive_int, default=8080)
    p_serve.add_argument("--state-dir")
    p_serve.add_argument("--cors-origin")
    p_serve.add_argument("--ui-dir", help="serve a built browser UI from this directory")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
