"""File formats: WVOL volumes, WMOD trained models, pairs.json manifests.

WVOL: magic "WVOL", version u8=1, rows/cols/depth u32 LE, then
rows*cols*depth float32 LE, slice-major then row-major.

WMOD: magic "WMOD", version u8=1, header_len u32 LE, UTF-8 JSON header
{k, d, lambda, beta, gamma, sigma, seed, pad, notes}, then float32 LE blobs
in order: source filters (k*d*d), target filters (k*d*d), mapping (k*k),
each row-major.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .csc import SolverConfig
from .training import TrainConfig, TrainedModel

WVOL_MAGIC = b"WVOL"
WMOD_MAGIC = b"WMOD"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Raised on malformed or mismatched file content."""


def save_wvol(path, volume):
    v = np.ascontiguousarray(volume, dtype=np.float32)
    if v.ndim != 3:
        raise FormatError(f"volume must be 3D, got shape {v.shape}")
    depth, rows, cols = v.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sBIII", WVOL_MAGIC, FORMAT_VERSION, rows, cols, depth))
        fh.write(v.tobytes())


def load_wvol(path):
    raw = Path(path).read_bytes()
    if len(raw) < 17:
        raise FormatError(f"{path}: truncated WVOL header")
    magic, version, rows, cols, depth = struct.unpack_from("<4sBIII", raw)
    if magic != WVOL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported WVOL version {version}")
    expected = 4 * rows * cols * depth
    payload = raw[17:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(depth, rows, cols).copy()


def normalize01(volume):
    """Min-max normalization to [0, 1] (per volume), used at ingestion."""
    v = np.asarray(volume, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi - lo < 1e-12:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def save_wmod(path, model):
    header = {
        "k": int(model.k),
        "d": int(model.d),
        "lambda": model.config.lam,
        "beta": model.config.beta,
        "gamma": model.config.gamma,
        "sigma": model.config.sigma,
        "seed": model.config.seed,
        "pad": model.config.pad,
        "notes": model.provenance,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sBI", WMOD_MAGIC, FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(model.fbx, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.fby, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.w, dtype="<f4").tobytes())


def load_wmod(path):
    raw = Path(path).read_bytes()
    if len(raw) < 9:
        raise FormatError(f"{path}: truncated WMOD header")
    magic, version, header_len = struct.unpack_from("<4sBI", raw)
    if magic != WMOD_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported WMOD version {version}")
    try:
        header = json.loads(raw[9:9 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed WMOD header: {exc}") from exc
    k, d = int(header["k"]), int(header["d"])
    body = raw[9 + header_len:]
    sizes = (k * d * d, k * d * d, k * k)
    if len(body) != 4 * sum(sizes):
        raise FormatError(
            f"{path}: blob is {len(body)} bytes, expected {4 * sum(sizes)}"
        )
    flat = np.frombuffer(body, dtype="<f4")
    fbx = flat[: sizes[0]].reshape(k, d, d).copy()
    fby = flat[sizes[0]: sizes[0] + sizes[1]].reshape(k, d, d).copy()
    w = flat[sizes[0] + sizes[1]:].reshape(k, k).copy()
    cfg = TrainConfig(
        lam=header["lambda"], beta=header["beta"], gamma=header["gamma"],
        sigma=header["sigma"], k=k, d=d, pad=int(header["pad"]),
        seed=int(header["seed"]), inner=SolverConfig(lam=header["lambda"]),
    )
    return TrainedModel(fbx=fbx, fby=fby, w=w, config=cfg,
                        provenance=header.get("notes", ""))


def save_pairs_manifest(path, entries):
    """entries: list of {source, target, registered, kernel} dicts."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(entries), fh, indent=2)
        fh.write("\n")


def load_pairs_manifest(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed manifest: {exc}") from exc
    if not isinstance(entries, list):
        raise FormatError(f"{path}: manifest must be a JSON array")
    for i, e in enumerate(entries):
        for key in ("source", "target", "registered"):
            if key not in e:
                raise FormatError(f"{path}: entry {i} missing field {key!r}")
    return entries
