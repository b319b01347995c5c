"""Command-line entry point for every pipeline stage.

Exit codes: 0 success, 1 usage/validation error, 2 data error (missing or
malformed files), 3 numeric failure (NaN).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import imgio
from .dataset import (DatasetError, DatasetSpec, build_dataset, read_dataset)
from .drr import ViewPose, default_pitch, render, set_render_threads
from .loss import LossWeights
from .metrics import MetricsSummary
from .spectrum import log_magnitude
from .sr import (TrainConfig, TrainingDiverged, evaluate, load_weights,
                 save_weights, train)
from .volume import (OpacityLut, VolumeFormatError, default_head_spec,
                     generate_phantom, load_volume, save_volume)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_USAGE)


def read_config_file(path) -> dict[str, str]:
    """Line-oriented ``key = value`` config; '#' starts a comment."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"malformed config line: {raw!r}", EXIT_DATA)
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def _merge_config(args, keys):
    """Flags override config-file values, which override defaults."""
    if not getattr(args, "config", None):
        return
    file_values = read_config_file(args.config)
    for key, cast in keys.items():
        if getattr(args, key, None) is None and key in file_values:
            setattr(args, key, cast(file_values[key]))


def cmd_phantom(args) -> int:
    dims = tuple(args.dims)
    spacing = tuple(args.spacing)
    spec = default_head_spec(seed=args.seed, dims=dims, spacing=spacing)
    vol = generate_phantom(spec)
    save_volume(vol, f"{args.out}.hdr")
    print(f"wrote {args.out}.hdr + {args.out}.raw "
          f"({vol.nx}x{vol.ny}x{vol.nz} @ {spacing} mm)")
    return 0


def cmd_render(args) -> int:
    vol = load_volume(args.volume)
    lut = OpacityLut()
    set_render_threads(args.threads)
    pitch = args.pitch if args.pitch else default_pitch(vol, args.size)
    pose = ViewPose(theta_x=args.rx, theta_y=args.ry,
                    det_w=args.size, det_h=args.size, pitch=pitch)
    t0 = time.perf_counter()
    img = render(vol, lut, pose)
    elapsed = (time.perf_counter() - t0) * 1e3
    print(f"time_ms={elapsed:.2f}")
    out = Path(args.out)
    imgio.write_pgm16(out, img)
    if args.png:
        imgio.write_png8(out.with_suffix(".png"), img)
    return 0


def cmd_spectrum(args) -> int:
    img = imgio.read_image(args.image)
    out = Path(args.out)
    mag = log_magnitude(img)
    if out.suffix.lower() == ".png":
        imgio.write_png8(out, mag)
    else:
        imgio.write_pgm16(out, mag)
    print(f"wrote {out}")
    return 0


def cmd_dataset(args) -> int:
    vol = load_volume(args.volume)
    spec = DatasetSpec(grid_n=args.grid_n, step_deg=args.step,
                       test_step_deg=args.test_step, seed=args.seed,
                       n_test=args.n_test, fov_scale=args.fov_scale)
    n_train, n_test = build_dataset(vol, OpacityLut(), spec, args.out,
                                    with_refs=args.refs)
    print(f"wrote {n_train} train pairs, {n_test} test pairs to {args.out}")
    return 0


def _label_for(weights: LossWeights) -> str:
    if weights.lambda_fd == 0.0:
        return "rec-only" if weights.lambda_rec == 1.0 else f"rec{weights.lambda_rec:g}"
    return f"rec{weights.lambda_rec:g}+fd{weights.lambda_fd:g}"


def cmd_train(args) -> int:
    pairs = read_dataset(Path(args.dataset) / "train")
    weights = LossWeights(lambda_rec=args.lambda_rec, lambda_fd=args.lambda_fd)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch,
                      epochs=args.epochs, seed=args.seed, weights=weights)
    w, history = train(pairs, cfg)
    out = Path(args.out)
    save_weights(out, w)
    history.write(out.with_suffix(out.suffix + ".history.tsv"))
    meta = (f"label = {_label_for(weights)}\n"
            f"lambda_rec = {weights.lambda_rec:g}\n"
            f"lambda_fd = {weights.lambda_fd:g}\n"
            f"epochs = {cfg.epochs}\nseed = {cfg.seed}\n")
    out.with_suffix(out.suffix + ".meta").write_text(meta)
    best = max(e[1] for e in history.epochs)
    print(f"wrote {out}; best val_psnr={best:.3f}")
    return 0


def _print_report(label: str, m: MetricsSummary) -> None:
    print(f"{label}\t{m.psnr_mean:.4f}\t{m.ssim_mean:.5f}\t{m.fd_mean:.5f}\t{m.n}")


def cmd_eval(args) -> int:
    test_pairs = read_dataset(Path(args.dataset) / "test")
    w = None
    label = "bicubic-only"
    if args.model:
        w = load_weights(args.model)
        meta_path = Path(args.model + ".meta")
        label = args.label
        if label is None and meta_path.is_file():
            label = read_config_file(meta_path).get("label", "model")
        label = label or "model"
    print("method\tpsnr\tssim\tfd\tn")
    res = evaluate(w, test_pairs)
    if res["model"] is not None:
        _print_report(label, res["model"])
    _print_report("bicubic", res["bicubic"])
    return 0


def cmd_ablate(args) -> int:
    from .ablate import run_ablation

    report = run_ablation(args.dataset, args.out, n_seeds=args.seeds,
                          epochs=args.epochs)
    print(report.to_tsv(), end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.volume, model_path=args.model)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="xsr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("phantom", help="generate a procedural head phantom volume")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dims", type=int, nargs=3, default=[256, 256, 256],
                   metavar=("NX", "NY", "NZ"))
    q.add_argument("--spacing", type=float, nargs=3, default=[1.0, 1.0, 1.0],
                   metavar=("SX", "SY", "SZ"))
    q.add_argument("--out", required=True, help="output path stem (.hdr/.raw)")
    q.set_defaults(func=cmd_phantom)

    q = sub.add_parser("render", help="render one synthetic X-ray view")
    q.add_argument("volume", help="volume header file")
    q.add_argument("--rx", type=float, default=0.0)
    q.add_argument("--ry", type=float, default=0.0)
    q.add_argument("--size", type=int, default=512)
    q.add_argument("--pitch", type=float, default=None)
    q.add_argument("--threads", type=int, default=8)
    q.add_argument("--png", action="store_true", help="also write an 8-bit PNG")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_render)

    q = sub.add_parser("spectrum", help="shifted log-magnitude spectrum of an image")
    q.add_argument("image")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("dataset", help="generate train/test HR-LR pairs from a volume")
    q.add_argument("volume")
    q.add_argument("--out", required=True)
    q.add_argument("--config", default=None)
    q.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    q.add_argument("--step", type=float, default=None)
    q.add_argument("--test-step", dest="test_step", type=float, default=None)
    q.add_argument("--n-test", dest="n_test", type=int, default=None)
    q.add_argument("--fov-scale", dest="fov_scale", type=float, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--refs", action="store_true")
    q.set_defaults(func=cmd_dataset)

    q = sub.add_parser("train", help="train the SR backbone on a dataset")
    q.add_argument("dataset")
    q.add_argument("--out", required=True, help="checkpoint path")
    q.add_argument("--config", default=None)
    q.add_argument("--epochs", type=int, default=None)
    q.add_argument("--lr", type=float, default=None)
    q.add_argument("--batch", type=int, default=None)
    q.add_argument("--lambda-rec", dest="lambda_rec", type=float, default=None)
    q.add_argument("--lambda-fd", dest="lambda_fd", type=float, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("eval", help="evaluate a checkpoint against the bicubic baseline")
    q.add_argument("dataset")
    q.add_argument("--model", default=None)
    q.add_argument("--label", default=None)
    q.set_defaults(func=cmd_eval)

    q = sub.add_parser("ablate", help="run the A/B/C loss-weight ablation")
    q.add_argument("dataset")
    q.add_argument("--out", required=True)
    q.add_argument("--seeds", type=int, default=3, help="number of seeds")
    q.add_argument("--epochs", type=int, default=20)
    q.set_defaults(func=cmd_ablate)

    q = sub.add_parser("serve", help="serve the HTTP rendering API and viewer")
    q.add_argument("volume")
    q.add_argument("--model", default=None)
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    q.set_defaults(func=cmd_serve)
    return p


_TRAIN_DEFAULTS = {
    "epochs": (int, 20), "lr": (float, 1e-4), "batch": (int, 4),
    "lambda_rec": (float, 1.0), "lambda_fd": (float, 0.01), "seed": (int, 0),
}
_DATASET_DEFAULTS = {
    "grid_n": (int, 15), "step": (float, 24.0), "test_step": (float, 20.0),
    "n_test": (int, 9), "fov_scale": (float, 0.6), "seed": (int, 0),
}


def _apply_defaults(args) -> None:
    table = {"train": _TRAIN_DEFAULTS, "dataset": _DATASET_DEFAULTS}.get(args.command)
    if table is None:
        return
    _merge_config(args, {k: cast for k, (cast, _) in table.items()})
    for key, (_, default) in table.items():
        if getattr(args, key, None) is None:
            setattr(args, key, default)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _apply_defaults(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FileNotFoundError, VolumeFormatError, imgio.ImageFormatError,
            DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
