"""CSV artifacts with schema headers, and the JSON-lines run manifest.

Every CSV starts with a comment line `# geflab-<schema> v<version>` followed
by optional `# key=value` lines and one header row. Floats are written with
repr so that re-reading gives back the exact doubles.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .landmarks import Landmark, LandmarkSet, ZERO

SCHEMA_VERSION = 1
LANDMARK_COLUMNS = ("re", "im", "kind", "jac_w", "residual")
PROFILE_COLUMNS = ("pair", "rho", "estimate", "stderr", "n_samples", "n_disks")
KACRICE_COLUMNS = ("kind", "r", "value", "stderr", "n_draws")


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, schema: str, columns: Sequence[str], rows: Iterable[Sequence],
              meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# geflab-{schema} v{SCHEMA_VERSION}\n")
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={_fmt(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path, schema: str) -> tuple[dict, list[dict]]:
    """Metadata and rows (as string dicts) of a CSV written by write_csv."""
    lines = Path(path).read_text().splitlines()
    expected = f"# geflab-{schema} v{SCHEMA_VERSION}"
    if not lines or lines[0] != expected:
        raise ValueError(f"{path}: expected header {expected!r}")
    meta = {}
    k = 1
    while k < len(lines) and lines[k].startswith("# "):
        key, _, val = lines[k][2:].partition("=")
        meta[key] = val
        k += 1
    rows = list(csv.DictReader(lines[k:]))
    return meta, rows


# ------------------------------------------------------------------ landmarks

def _landmark_row(lm: Landmark):
    return (lm.position.real, lm.position.imag, lm.kind, lm.jac_w, lm.residual)


def write_landmarks(path, ls: LandmarkSet) -> Path:
    rows = [_landmark_row(lm) for lm in ls.zeros + ls.criticals]
    meta = {"center": f"{ls.center.real!r},{ls.center.imag!r}", "radius": ls.radius}
    return write_csv(path, "landmarks", LANDMARK_COLUMNS, rows, meta)


def _parse_landmark(r) -> Landmark:
    return Landmark(complex(float(r["re"]), float(r["im"])), r["kind"],
                    float(r["jac_w"]), float(r["residual"]))


def _split(lms, center, radius, diag=None):
    zeros = tuple(lm for lm in lms if lm.kind == ZERO)
    crits = tuple(lm for lm in lms if lm.kind != ZERO)
    return LandmarkSet(center, radius, zeros, crits, diag or {})


def _parse_center(text):
    a, b = text.split(",")
    return complex(float(a), float(b))


def read_landmarks(path) -> LandmarkSet:
    meta, rows = read_csv(path, "landmarks")
    return _split([_parse_landmark(r) for r in rows], _parse_center(meta["center"]),
                  float(meta["radius"]))


def write_corpus(path, corpus: Sequence[LandmarkSet]) -> Path:
    """Many landmark sets sharing one disk, keyed by a leading sample column."""
    if not corpus:
        raise ValueError("empty corpus")
    rows = [(i,) + _landmark_row(lm) for i, ls in enumerate(corpus) for lm in ls.zeros + ls.criticals]
    ls0 = corpus[0]
    meta = {"center": f"{ls0.center.real!r},{ls0.center.imag!r}", "radius": ls0.radius,
            "samples": len(corpus)}
    return write_csv(path, "corpus", ("sample",) + LANDMARK_COLUMNS, rows, meta)


def read_corpus(path) -> list[LandmarkSet]:
    meta, rows = read_csv(path, "corpus")
    center, radius = _parse_center(meta["center"]), float(meta["radius"])
    groups: list[list[Landmark]] = [[] for _ in range(int(meta["samples"]))]
    for r in rows:
        groups[int(r["sample"])].append(_parse_landmark(r))
    return [_split(g, center, radius) for g in groups]


# ------------------------------------------------------------------ tables

def write_profile(path, profile, n_samples: int) -> Path:
    rows = [(profile.label, row.r, row.estimate, row.stderr, n_samples, row.n_disks)
            for row in profile.rows]
    return write_csv(path, "profile", PROFILE_COLUMNS, rows)


def write_kacrice(path, rows) -> Path:
    return write_csv(path, "kacrice", KACRICE_COLUMNS, rows)


def write_matrix(path, x, y, values, schema: str = "spectrogram") -> Path:
    """Matrix with the first row holding x and the first column holding y."""
    rows = [[yv] + list(vals) for yv, vals in zip(y, np.asarray(values))]
    return write_csv(path, schema, ["y\\x"] + [_fmt(v) for v in x], rows)


def read_matrix(path, schema: str = "spectrogram"):
    lines = Path(path).read_text().splitlines()
    if lines[0] != f"# geflab-{schema} v{SCHEMA_VERSION}":
        raise ValueError(f"{path}: wrong schema")
    body = [ln for ln in lines if not ln.startswith("#")]
    head = body[0].split(",")
    x = np.array([float(v) for v in head[1:]])
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    return x, data[:, 0], data[:, 1:]


# ------------------------------------------------------------------ manifest

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Append-only JSON-lines log: a `start` record, then a `finish` record."""

    def __init__(self, path, command: str, config_hash: str, seed: int):
        self.path = Path(path)
        self.command = command
        self.config_hash = config_hash
        self.seed = seed
        self.t0 = time.time()
        self.artifacts: dict[str, str] = {}
        self.status: dict[str, str] = {}

    def _write(self, rec: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def _base(self, event):
        return {"event": event, "command": self.command, "config_hash": self.config_hash,
                "seed": self.seed, "version": tool_version()}

    def start(self) -> None:
        self._write(self._base("start") | {"started": self.t0})

    def add(self, path) -> None:
        p = Path(path)
        self.artifacts[p.name] = sha256_file(p)

    def finish(self, ok: bool) -> None:
        self._write(self._base("finish") | {
            "wall_clock_s": round(time.time() - self.t0, 3),
            "status": "ok" if ok else "failed",
            "experiments": self.status,
            "artifacts": self.artifacts,
        })


def read_manifest(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
