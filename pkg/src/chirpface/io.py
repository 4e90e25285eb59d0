"""File formats: PCM16 WAV, feature CSV, JSON helpers."""

from __future__ import annotations

import csv
import json
import wave
from pathlib import Path

import numpy as np

from chirpface.chirp import PCM16Buffer, SampleBuffer, dequantize_pcm16, quantize_pcm16

FEATURE_COLUMNS = ("frame_index", "time_s", "bin_index", "amplitude", "phase",
                   "d_amplitude", "d_phase")


def write_wav(path, buf: SampleBuffer) -> int:
    """Write mono 16-bit PCM; returns the number of clipped samples."""
    pcm = quantize_pcm16(buf)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(buf.sample_rate)))
        w.writeframes(pcm.to_bytes())
    return pcm.clipped


def read_wav(path) -> SampleBuffer:
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2 or w.getcomptype() != "NONE":
            raise ValueError(f"{path}: only 16-bit PCM WAV is supported")
        channels = w.getnchannels()
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    codes = np.frombuffer(raw, dtype="<i2")
    if channels > 1:
        codes = codes.reshape(-1, channels)[:, 0]
    return dequantize_pcm16(PCM16Buffer(codes.astype(np.int16), float(rate)))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_features_csv(path, features, labels=None, sessions=None) -> None:
    """One row per frame; optional ``label`` and ``session`` columns are appended."""
    cols = list(FEATURE_COLUMNS)
    if labels is not None:
        cols.append("label")
    if sessions is not None:
        cols.append("session")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i, (fi, t, a, p, da, dp) in enumerate(zip(
                features.frame_index, features.time_s, features.amplitude, features.phase,
                features.d_amplitude, features.d_phase)):
            row = [int(fi), _fmt(t), features.bin_index, _fmt(a), _fmt(p), _fmt(da), _fmt(dp)]
            if labels is not None:
                row.append(labels[i])
            if sessions is not None:
                row.append(sessions[i])
            w.writerow(row)


def read_features_csv(path) -> dict:
    """Columns of a feature CSV as numpy arrays (label/session kept as strings)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    out = {}
    for col in rows[0]:
        vals = [r[col] for r in rows]
        if col in ("label", "session"):
            out[col] = np.asarray(vals)
        elif col in ("frame_index", "bin_index"):
            out[col] = np.asarray(vals, dtype=int)
        else:
            out[col] = np.asarray(vals, dtype=float)
    return out


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())
