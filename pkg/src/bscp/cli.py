"""Command-line interface.

All subcommands execute locally by default. ``predict`` and ``extract`` accept
``--server URL`` to act as thin clients of a running service instance
(``bscp serve``).
"""

from __future__ import annotations

import argparse
import logging
import struct
import sys
from pathlib import Path

import numpy as np

from . import classifier
from .config import ExperimentConfig, load_config
from .errors import BscpError
from .evaluate import (render_report, render_sweep, run_protocol, sweep, train_full)
from .mask import load_mask, normalize_shape, trace_contour
from .model_io import load_model, save_model
from .pipeline import extract_features, encode_shape, geometry_from_config, list_dataset
from .skeleton import (associate_thickness, distance_transform, dump_skeleton_overlay_pgm,
                       dump_thickness_table, extract_skeleton)
from .synthetic import VARIANTS, write_dataset

DESCRIPTOR_MAGIC = b"BSCD"


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    if getattr(args, "protocol", None):
        cfg = cfg.with_overrides(protocol=args.protocol)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seeds=tuple(args.seed + i for i in range(len(cfg.seeds))))
    return cfg


def write_descriptor_dump(path: Path, feats) -> None:
    """Binary matrix (magic, version, n_parts, dim, float32 rows) plus a text
    sidecar with one `start end median_x median_y` line per part."""
    desc = np.ascontiguousarray(feats.descriptors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(DESCRIPTOR_MAGIC)
        fh.write(struct.pack("<H", 1))
        fh.write(struct.pack("<II", desc.shape[0], desc.shape[1]))
        fh.write(desc.tobytes())
    sidecar = path.with_suffix(path.suffix + ".parts.txt")
    with open(sidecar, "w") as fh:
        fh.write("# start_index end_index median_x median_y\n")
        for (i, j), (x, y) in zip(feats.pairs, feats.positions):
            fh.write(f"{i} {j} {x:.3f} {y:.3f}\n")


def read_descriptor_dump(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != DESCRIPTOR_MAGIC:
            raise BscpError(f"{path} is not a descriptor dump")
        (_version,) = struct.unpack("<H", fh.read(2))
        n, d = struct.unpack("<II", fh.read(8))
        return np.frombuffer(fh.read(4 * n * d), dtype="<f4").reshape(n, d)


def _cmd_synth(args) -> int:
    written = write_dataset(args.out, variant=args.variant, per_class=args.per_class,
                            seed=args.seed or 0)
    for cname, count in written.items():
        print(f"{cname}: {count} shapes")
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    bundle = train_full(args.data, cfg, seed=cfg.seeds[0])
    save_model(bundle, args.out)
    print(f"model written to {args.out} "
          f"({bundle.n_classes} classes, K={bundle.codebook.size})")
    return 0


def _cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    report = run_protocol(args.data, cfg)
    text = render_report(report)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    values = [int(v) for v in args.values.split(",") if v]
    results = sweep(args.data, cfg, args.param, values)
    text = render_sweep(results, args.param)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def _cmd_predict(args) -> int:
    if args.server:
        import httpx

        for path in args.paths:
            resp = httpx.post(f"{args.server.rstrip('/')}/predict",
                              json={"mask_path": str(path)}, timeout=300.0)
            resp.raise_for_status()
            print(f"{path}\t{resp.json()['label']}")
        return 0
    bundle = load_model(args.model)
    for path in args.paths:
        feats = extract_features(load_mask(path), bundle.config, geom=bundle.geometry)
        vec = encode_shape(feats, bundle.codebook, bundle.config.llc_neighbors)
        label = bundle.svm.class_labels[classifier.predict(bundle.svm, vec)]
        print(f"{path}\t{label}")
    return 0


def _cmd_extract(args) -> int:
    if args.server:
        import httpx

        resp = httpx.post(f"{args.server.rstrip('/')}/extract",
                          json={"mask_path": str(args.data), "out_path": str(args.out)},
                          timeout=300.0)
        resp.raise_for_status()
        body = resp.json()
        print(f"{body['n_parts']} parts x {body['dim']} dims -> {args.out}")
        return 0
    cfg = _config_from_args(args)
    data = Path(args.data)
    targets = []
    if data.is_dir():
        classes, records = list_dataset(data)
        out_root = Path(args.out)
        for ci, p in records:
            dst = out_root / classes[ci] / (p.stem + ".bscd")
            dst.parent.mkdir(parents=True, exist_ok=True)
            targets.append((p, dst))
    else:
        targets.append((data, Path(args.out)))
    for src, dst in targets:
        mask = load_mask(src)
        feats = extract_features(mask, cfg, name=src.name)
        write_descriptor_dump(dst, feats)
        if args.debug_dir:
            dbg = Path(args.debug_dir)
            dbg.mkdir(parents=True, exist_ok=True)
            norm = normalize_shape(mask)
            field = distance_transform(norm)
            skel = extract_skeleton(norm, field, cfg.prune_ratio)
            contour = trace_contour(norm, cfg.contour_points)
            assoc = associate_thickness(contour, skel)
            dump_skeleton_overlay_pgm(dbg / (src.stem + "_skeleton.pgm"), norm, skel)
            dump_thickness_table(dbg / (src.stem + "_thickness.txt"), assoc)
        print(f"{src} -> {dst} ({feats.n_parts} parts x {feats.descriptors.shape[1]} dims)")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(model_path=args.model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bscp",
                                     description="Shape classification from binary masks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--variant", default="four-class", choices=sorted(VARIANTS))
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train codebook + classifier on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--protocol", choices=("half-split", "loo", "leave-one-out"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="re-run evaluation over parameter values")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("predict", help="classify mask files with a trained model")
    p.add_argument("--model")
    p.add_argument("--server", help="URL of a running service to delegate to")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("extract", help="dump per-shape part descriptors")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--debug-dir")
    p.add_argument("--server", help="URL of a running service to delegate to")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--model", help="model file to load at startup")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "protocol", None) == "loo":
        args.protocol = "leave-one-out"
    try:
        return args.func(args)
    except BscpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
