import json
import struct

import numpy as np
import pytest

from weenie.cli import main
from weenie.csc import SolverConfig, random_filter_bank
from weenie.io import (
    FormatError,
    load_pairs_manifest,
    load_wvol,
    load_wmod,
    normalize01,
    save_pairs_manifest,
    save_wvol,
    save_wmod,
)
from weenie.training import TrainConfig, TrainedModel


# ------------------------------------------------------------------- WVOL

def test_wvol_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    v = rng.random((3, 5, 7)).astype(np.float32)
    p = tmp_path / "v.wvol"
    save_wvol(p, v)
    assert np.array_equal(load_wvol(p), v)


def test_wvol_header_layout(tmp_path):
    v = np.zeros((2, 3, 4), dtype=np.float32)
    p = tmp_path / "v.wvol"
    save_wvol(p, v)
    raw = p.read_bytes()
    magic, version, rows, cols, depth = struct.unpack_from("<4sBIII", raw)
    assert magic == b"WVOL"
    assert version == 1
    assert (rows, cols, depth) == (3, 4, 2)
    assert len(raw) == 17 + 4 * 24


def test_wvol_bad_magic(tmp_path):
    p = tmp_path / "bad.wvol"
    p.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FormatError):
        load_wvol(p)


def test_wvol_truncated_payload(tmp_path):
    v = np.zeros((1, 4, 4), dtype=np.float32)
    p = tmp_path / "v.wvol"
    save_wvol(p, v)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(FormatError):
        load_wvol(p)


def test_wvol_bad_version(tmp_path):
    p = tmp_path / "v.wvol"
    save_wvol(p, np.zeros((1, 2, 2), dtype=np.float32))
    raw = bytearray(p.read_bytes())
    raw[4] = 9
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_wvol(p)


def test_wvol_rejects_non_3d(tmp_path):
    with pytest.raises(FormatError):
        save_wvol(tmp_path / "x.wvol", np.zeros((4, 4)))


# ---------------------------------------------------------------- normalize

def test_normalize01_range():
    rng = np.random.default_rng(1)
    v = 5.0 + 3.0 * rng.random((2, 4, 4))
    n = normalize01(v)
    assert n.min() == pytest.approx(0.0)
    assert n.max() == pytest.approx(1.0)


def test_normalize01_constant_is_zero():
    assert np.all(normalize01(np.full((1, 4, 4), 7.0)) == 0.0)


# ------------------------------------------------------------------- WMOD

def _model(k=3, d=5):
    fb = random_filter_bank(k, d, np.random.default_rng(2)).astype(np.float32)
    cfg = TrainConfig(lam=0.03, beta=0.2, gamma=0.4, sigma=1.5, k=k, d=d,
                      outer_iters=2, pad=6,
                      inner=SolverConfig(lam=0.03), seed=42)
    w = np.random.default_rng(3).standard_normal((k, k)).astype(np.float32)
    return TrainedModel(fbx=fb, fby=fb[::-1].copy(), w=w, config=cfg,
                        provenance="abc123")


def test_wmod_roundtrip(tmp_path):
    m = _model()
    p = tmp_path / "m.wmod"
    save_wmod(p, m)
    loaded = load_wmod(p)
    assert np.array_equal(loaded.fbx, m.fbx)
    assert np.array_equal(loaded.fby, m.fby)
    assert np.array_equal(loaded.w, m.w)
    assert loaded.config.lam == m.config.lam
    assert loaded.config.beta == m.config.beta
    assert loaded.config.gamma == m.config.gamma
    assert loaded.config.sigma == m.config.sigma
    assert loaded.config.seed == m.config.seed
    assert loaded.config.pad == m.config.pad
    assert loaded.provenance == m.provenance


def test_wmod_header_is_json(tmp_path):
    p = tmp_path / "m.wmod"
    save_wmod(p, _model())
    raw = p.read_bytes()
    magic, version, hlen = struct.unpack_from("<4sBI", raw)
    assert magic == b"WMOD"
    assert version == 1
    header = json.loads(raw[9:9 + hlen])
    assert header["k"] == 3 and header["d"] == 5
    assert header["lambda"] == 0.03


def test_wmod_bad_magic(tmp_path):
    p = tmp_path / "m.wmod"
    p.write_bytes(b"XXXX" + bytes(30))
    with pytest.raises(FormatError):
        load_wmod(p)


def test_wmod_truncated_blobs(tmp_path):
    p = tmp_path / "m.wmod"
    save_wmod(p, _model())
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_wmod(p)


# ----------------------------------------------------------------- manifest

def test_manifest_roundtrip(tmp_path):
    entries = [
        {"source": "a.wvol", "target": "b.wvol", "registered": True,
         "kernel": None},
        {"source": "c.wvol", "target": "d.wvol", "registered": False,
         "kernel": 0.01},
    ]
    p = tmp_path / "pairs.json"
    save_pairs_manifest(p, entries)
    assert load_pairs_manifest(p) == entries


def test_manifest_missing_field_rejected(tmp_path):
    p = tmp_path / "pairs.json"
    p.write_text(json.dumps({"pairs": [{"source": "a"}]}))
    with pytest.raises((FormatError, KeyError, ValueError)):
        load_pairs_manifest(p)


# ---------------------------------------------------------------------- CLI

def test_cli_phantom_writes_volumes_and_manifest(tmp_path, capsys):
    out = tmp_path / "data"
    rc = main(["phantom", "--out", str(out), "--count", "4",
               "--size", "16x16x2", "--seed", "3",
               "--registered-fraction", "0.5"])
    assert rc == 0
    sources = sorted(out.glob("*_source.wvol"))
    targets = sorted(out.glob("*_target.wvol"))
    assert len(sources) == 4 and len(targets) == 4
    entries = load_pairs_manifest(out / "pairs.json")
    assert len(entries) == 2
    assert all(e["registered"] for e in entries)
    v = load_wvol(sources[0])
    assert v.shape == (2, 8, 8)  # half in-plane resolution LR source
    t = load_wvol(targets[0])
    assert t.shape == (2, 16, 16)


def test_cli_phantom_bad_size(tmp_path):
    rc = main(["phantom", "--out", str(tmp_path / "d"), "--size", "banana"])
    assert rc == 2


def test_cli_align_recovers_pairs(tmp_path):
    out = tmp_path / "d"
    main(["phantom", "--out", str(out), "--count", "5", "--size", "24x24x2",
          "--seed", "6", "--registered-fraction", "0.0"])
    src_dir, tgt_dir = tmp_path / "src", tmp_path / "tgt"
    src_dir.mkdir(), tgt_dir.mkdir()
    for p in out.glob("*_source.wvol"):
        p.rename(src_dir / p.name)
    for p in out.glob("*_target.wvol"):
        p.rename(tgt_dir / p.name)
    rc = main(["align", "--source-dir", str(src_dir),
               "--target-dir", str(tgt_dir),
               "--out", str(tmp_path / "aligned.json")])
    assert rc == 0
    entries = load_pairs_manifest(tmp_path / "aligned.json")
    assert len(entries) == 5
    assert all(not e["registered"] for e in entries)
    assert all(e["kernel"] is not None for e in entries)


def test_cli_align_missing_dir(tmp_path):
    rc = main(["align", "--source-dir", str(tmp_path / "nope"),
               "--target-dir", str(tmp_path / "nope"),
               "--out", str(tmp_path / "a.json")])
    assert rc == 2


def test_cli_train_synth_eval_end_to_end(tmp_path):
    out = tmp_path / "d"
    main(["phantom", "--out", str(out), "--count", "2", "--size", "16x16x2",
          "--seed", "1"])
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({
        "k": 4, "d": 3, "outer_iters": 1, "pad": 2, "lambda": 0.05,
        "inner": {"max_iters": 5, "tol": 1e-6},
    }))
    modelp = tmp_path / "m.wmod"
    tracep = tmp_path / "trace.json"
    rc = main(["train", "--pairs", str(out / "pairs.json"),
               "--config", str(cfgp), "--out", str(modelp),
               "--trace", str(tracep)])
    assert rc == 0
    trace = json.loads(tracep.read_text())
    assert len(trace["iterations"]) == 2

    pred = tmp_path / "pred.wvol"
    rc = main(["synth", "--model", str(modelp),
               "--input", str(out / "sub000_source.wvol"),
               "--out", str(pred)])
    assert rc == 0
    assert load_wvol(pred).shape == (2, 16, 16)

    report = tmp_path / "report.json"
    rc = main(["eval", "--pred", str(pred),
               "--ref", str(out / "sub000_target.wvol"),
               "--json", str(report)])
    assert rc == 0
    payload = json.loads(report.read_text())
    assert "psnr_db" in payload and "ssim" in payload


def test_cli_train_unknown_config_field(tmp_path):
    out = tmp_path / "d"
    main(["phantom", "--out", str(out), "--count", "1", "--size", "16x16x2"])
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({"bogus": 1}))
    rc = main(["train", "--pairs", str(out / "pairs.json"),
               "--config", str(cfgp), "--out", str(tmp_path / "m.wmod")])
    assert rc == 2


def test_cli_eval_missing_file(tmp_path):
    rc = main(["eval", "--pred", str(tmp_path / "a.wvol"),
               "--ref", str(tmp_path / "b.wvol")])
    assert rc == 2


def test_cli_train_determinism(tmp_path):
    out = tmp_path / "d"
    main(["phantom", "--out", str(out), "--count", "2", "--size", "16x16x2",
          "--seed", "4"])
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({
        "k": 4, "d": 3, "outer_iters": 1, "pad": 2,
        "inner": {"max_iters": 5},
    }))
    m1, m2 = tmp_path / "m1.wmod", tmp_path / "m2.wmod"
    for mp in (m1, m2):
        rc = main(["train", "--pairs", str(out / "pairs.json"),
                   "--config", str(cfgp), "--out", str(mp)])
        assert rc == 0
    assert m1.read_bytes() == m2.read_bytes()
