"""Command-line interface: phantom generation, alignment, training,
synthesis, and evaluation.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
Volumes are min-max normalized to [0, 1] when ingested for alignment,
training, and synthesis; evaluation compares stored intensities as-is.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import align as align_mod
from . import features, io, quality
from .csc import SolverConfig
from .resample import PhantomSpec, bicubic_resize, generate_phantoms
from .synth import SynthesisConfig, synthesize_volume
from .training import TrainConfig, TrainingPair, train


def _parse_size(text):
    try:
        rows, cols, depth = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"size must look like 32x32x4, got {text!r}") from None
    return rows, cols, depth


def cmd_phantom(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, cols, depth = _parse_size(args.size)
    spec = PhantomSpec(size=(rows, cols, depth), count=args.count,
                       seed=args.seed, modality_transform=args.modality,
                       registered_fraction=args.registered_fraction)
    subjects = generate_phantoms(spec)
    # Unregistered targets are written under shuffled names so file order
    # does not leak the pairing.
    rng = np.random.default_rng(spec.seed + 1)
    unreg = [i for i, s in enumerate(subjects) if not s.registered]
    shuffled = {i: j for i, j in zip(unreg, rng.permutation(unreg))}
    entries = []
    for i, subj in enumerate(subjects):
        src = out / f"sub{i:03d}_source.wvol"
        io.save_wvol(src, subj.source)
        slot = shuffled.get(i, i)
        tgt = out / f"sub{slot:03d}_target.wvol"
        io.save_wvol(tgt, subj.target)
        if subj.registered:
            entries.append({"source": str(src), "target": str(tgt),
                            "registered": True, "kernel": None})
    io.save_pairs_manifest(out / "pairs.json", entries)
    print(f"wrote {len(subjects)} pairs ({len(entries)} registered) to {out}")
    return 0


def _load_dir(dirpath):
    paths = sorted(Path(dirpath).glob("*.wvol"))
    if not paths:
        raise ValueError(f"no .wvol files in {dirpath}")
    return paths, [io.normalize01(io.load_wvol(p)) for p in paths]


def cmd_align(args):
    if args.sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {args.sigma}")
    src_paths, src_vols = _load_dir(args.source_dir)
    tgt_paths, tgt_vols = _load_dir(args.target_dir)
    registered = []
    if args.registered:
        for e in io.load_pairs_manifest(args.registered):
            p = [str(x) for x in src_paths].index(str(Path(e["source"])))
            q = [str(x) for x in tgt_paths].index(str(Path(e["target"])))
            registered.append((p, q))
    xs = [features.extract_hf_lr(v) for v in src_vols]
    ys = [features.extract_hf_hr(v) for v in tgt_vols]
    aligned = align_mod.align_features(xs, ys, args.sigma, registered=registered)
    entries = [
        {"source": str(src_paths[p.source_index]),
         "target": str(tgt_paths[p.target_index]),
         "registered": p.registered, "kernel": p.kernel}
        for p in aligned
    ]
    io.save_pairs_manifest(args.out, entries)
    print(f"aligned {len(entries)} pairs -> {args.out}")
    return 0


_CONFIG_FIELDS = {
    "lambda": "lam", "beta": "beta", "gamma": "gamma", "sigma": "sigma",
    "k": "k", "d": "d", "outer_iters": "outer_iters", "pad": "pad",
    "slice_stride": "slice_stride", "seed": "seed",
}
_INNER_FIELDS = {"rho": "rho", "max_iters": "max_iters", "tol": "tol"}


def _train_config(path):
    if path is None:
        return TrainConfig()
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    kwargs = {}
    inner_kwargs = {}
    for key, value in raw.items():
        if key in _CONFIG_FIELDS:
            kwargs[_CONFIG_FIELDS[key]] = value
        elif key == "inner":
            for ik, iv in value.items():
                if ik not in _INNER_FIELDS:
                    raise ValueError(f"unknown config field inner.{ik}")
                inner_kwargs[_INNER_FIELDS[ik]] = iv
        else:
            raise ValueError(f"unknown config field {key!r}")
    cfg = TrainConfig(**kwargs)
    inner = replace(SolverConfig(lam=cfg.lam), **inner_kwargs)
    return replace(cfg, inner=inner)


def cmd_train(args):
    entries = io.load_pairs_manifest(args.pairs)
    if not entries:
        raise ValueError(f"{args.pairs}: manifest is empty")
    cfg = _train_config(args.config)
    pairs = [
        TrainingPair(
            source=io.normalize01(io.load_wvol(e["source"])),
            target=io.normalize01(io.load_wvol(e["target"])),
            registered=bool(e["registered"]),
            kernel=e.get("kernel"),
        )
        for e in entries
    ]
    result = train(pairs, cfg)
    io.save_wmod(args.out, result.model)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump({"iterations": list(result.trace)}, fh, indent=2)
    first, last = result.trace[0]["total"], result.trace[-1]["total"]
    print(f"trained {len(pairs)} pairs: objective {first:.4g} -> {last:.4g}; "
          f"model -> {args.out}")
    return 0


def cmd_synth(args):
    model = io.load_wmod(args.model)
    vol = io.normalize01(io.load_wvol(args.input))
    up = np.clip(bicubic_resize(vol, args.scale), 0.0, 1.0)
    cfg = SynthesisConfig(iters=args.iters,
                          inner=SolverConfig(lam=model.config.lam),
                          pad=model.config.pad)
    out = synthesize_volume(up, model, cfg)
    io.save_wvol(args.out, out)
    print(f"synthesized {out.shape} -> {args.out}")
    return 0


def cmd_eval(args):
    pred = io.load_wvol(args.pred)
    ref = io.load_wvol(args.ref)
    report = quality.evaluate(pred, ref, peak=args.peak)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    print(f"psnr_db={report.psnr_db} ssim={report.ssim}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weenie",
        description="Joint convolutional sparse coding for volumetric "
                    "super-resolution and cross-modality synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a paired phantom dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--size", default="32x32x4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modality", default="sigmoid-remap",
                   choices=["sigmoid-remap", "inverse", "gamma"])
    p.add_argument("--registered-fraction", type=float, default=1.0)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("align", help="pair unregistered source/target volumes")
    p.add_argument("--source-dir", required=True)
    p.add_argument("--target-dir", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--registered", default=None,
                   help="manifest of known-registered pairs to bypass alignment")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("train", help="train a joint model from a manifest")
    p.add_argument("--pairs", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="synthesize an HR target-modality volume")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--scale", type=float, default=2.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="PSNR/SSIM of a prediction vs reference")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--peak", type=float, default=1.0)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (io.FormatError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
