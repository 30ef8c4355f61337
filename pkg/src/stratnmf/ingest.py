"""File formats: dense CSV, sparse COO triplets, vocabularies, manifests, models.

Every loader enforces non-negativity at the boundary, so nothing negative ever
reaches the engine. Floats are written with ``repr`` so that a write/read
round trip is bit-exact.

Manifest (JSON, paths relative to the manifest file)::

    {
      "n": 100,
      "strata": [
        {"name": "low", "path": "low.csv", "format": "dense-csv"},
        {"name": "docs", "path": "docs.coo", "format": "sparse-coo", "rows": 40}
      ],
      "vocabulary": "vocab.txt",          # optional
      "exclude_columns": [6, "longitude"],# optional, indices or vocabulary labels
      "tfidf": false,                     # optional, TF-IDF over all strata jointly
      "fit_defaults": {"rank": 5, "iters": 10000}  # optional
    }

A stratum may also name a ``"v_true"`` CSV holding a planted shift.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse as sp

from .engine import RNG_ALGORITHM, FitConfig, Model, StrataDataset
from .matrix import Array, sparse

PathLike = Union[str, Path]

FORMATS = ("dense-csv", "sparse-coo")
MODEL_META = "model.json"


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


# ---------------------------------------------------------------- dense CSV


def read_dense_csv(path: PathLike) -> tuple:
    """Parse a dense CSV into ``(matrix, header or None)``.

    A first row containing any non-numeric field is taken as a header.
    Row and column numbers in errors are 1-based file positions.
    """
    path = Path(path)
    rows, header, width = [], None, None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            values = [_parse_float(f) for f in fields]
            if header is None and not rows and any(x is None for x in values):
                header = [f.strip() for f in fields]
                width = len(header)
                continue
            if width is None:
                width = len(fields)
            if len(fields) != width:
                raise FormatError(
                    f"{path}: row {lineno} has {len(fields)} fields, expected {width}"
                )
            for col, (raw, x) in enumerate(zip(fields, values), start=1):
                if x is None:
                    raise FormatError(f"{path}: row {lineno}, column {col}: not a number: {raw!r}")
                if not (math.isfinite(x) and x >= 0):
                    raise FormatError(
                        f"{path}: row {lineno}, column {col}: value {raw.strip()} is not a finite non-negative number"
                    )
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64), header


def load_dense_csv(path: PathLike) -> Array:
    return read_dense_csv(path)[0]


def write_dense_csv(path: PathLike, values, header: Optional[Sequence[str]] = None) -> None:
    """Write a 2-D array (or a 1-D array as a single row)."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in values:
            fh.write(",".join(map(repr, row.tolist())) + "\n")


# ---------------------------------------------------------------- sparse COO


def load_sparse_coo(path: PathLike, rows: int, cols: int) -> sp.csr_array:
    """Read ``row col value`` lines (0-based, whitespace separated).

    Duplicate ``(row, col)`` pairs are summed. Blank lines and lines starting
    with ``%`` or ``#`` are ignored.
    """
    path = Path(path)
    r_idx, c_idx, vals = [], [], []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line[0] in "%#":
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}: line {lineno}: expected 'row col value'")
            try:
                i, j, x = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise FormatError(f"{path}: line {lineno}: cannot parse {line!r}") from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise FormatError(
                    f"{path}: line {lineno}: index ({i}, {j}) out of bounds for shape ({rows}, {cols})"
                )
            if not (math.isfinite(x) and x > 0):
                raise FormatError(f"{path}: line {lineno}: value {parts[2]} must be > 0")
            r_idx.append(i)
            c_idx.append(j)
            vals.append(x)
    coo = sp.coo_array(
        (np.array(vals, dtype=np.float64), (np.array(r_idx, dtype=np.int64), np.array(c_idx, dtype=np.int64))),
        shape=(rows, cols),
    )
    return sparse(coo, name=str(path))


def write_sparse_coo(path: PathLike, mat) -> None:
    mat = sparse(mat)
    coo = mat.tocoo()
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, j, x in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            fh.write(f"{i} {j} {x!r}\n")


# ---------------------------------------------------------------- vocabulary


def load_vocab(path: PathLike) -> list:
    """One token per line; line index is the column index."""
    with Path(path).open(encoding="utf-8") as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh]


def write_vocab(path: PathLike, vocab: Sequence[str]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for token in vocab:
            fh.write(f"{token}\n")


# ---------------------------------------------------------------- TF-IDF


def tfidf(counts) -> sp.csr_array:
    """Smoothed TF-IDF with unit-length rows.

    ``tf`` is the raw count and ``idf = ln((1 + D) / (1 + df)) + 1`` with
    ``D`` documents (rows) and ``df`` the number of documents containing the
    term. Empty documents stay zero rows.
    """
    X = sparse(counts, name="counts")
    D = X.shape[0]
    df = np.bincount(X.indices, minlength=X.shape[1])
    idf = np.log((1.0 + D) / (1.0 + df)) + 1.0
    data = X.data * idf[X.indices]
    row_nnz = np.diff(X.indptr)
    row_of = np.repeat(np.arange(D), row_nnz)
    norms = np.sqrt(np.bincount(row_of, weights=data * data, minlength=D))
    data = data / norms[row_of]
    out = sp.csr_array((data, X.indices.copy(), X.indptr.copy()), shape=X.shape)
    return sparse(out)


def tfidf_strata(strata: Sequence) -> list:
    """TF-IDF over the documents of all strata together, split back per stratum."""
    stacked = sp.vstack([sparse(a) for a in strata], format="csr")
    weighted = tfidf(stacked)
    bounds = np.cumsum([0] + [a.shape[0] for a in strata])
    return [sparse(weighted[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]


# ---------------------------------------------------------------- manifest


@dataclass
class StratumEntry:
    name: str
    path: str
    format: str = "dense-csv"
    rows: Optional[int] = None
    v_true: Optional[str] = None


@dataclass
class Manifest:
    n: int
    strata: list
    vocabulary: Optional[str] = None
    exclude_columns: list = field(default_factory=list)
    tfidf: bool = False
    fit_defaults: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.strata:
            raise FormatError("manifest lists no strata")
        names = [s.name for s in self.strata]
        if len(set(names)) != len(names):
            raise FormatError(f"stratum names must be unique: {names}")
        for s in self.strata:
            if s.format not in FORMATS:
                raise FormatError(f"stratum {s.name!r}: unknown format {s.format!r}")
            if s.format == "sparse-coo" and s.rows is None:
                raise FormatError(f"stratum {s.name!r}: sparse-coo needs 'rows'")

    def resolve(self, rel: str) -> Path:
        return self.base_dir / rel

    def to_json(self) -> dict:
        out = {"n": self.n, "strata": []}
        for s in self.strata:
            entry = {"name": s.name, "path": s.path, "format": s.format}
            if s.rows is not None:
                entry["rows"] = s.rows
            if s.v_true is not None:
                entry["v_true"] = s.v_true
            out["strata"].append(entry)
        if self.vocabulary is not None:
            out["vocabulary"] = self.vocabulary
        if self.exclude_columns:
            out["exclude_columns"] = list(self.exclude_columns)
        if self.tfidf:
            out["tfidf"] = True
        if self.fit_defaults:
            out["fit_defaults"] = dict(self.fit_defaults)
        return out


def load_manifest(path: PathLike) -> Manifest:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        strata = [StratumEntry(**entry) for entry in raw["strata"]]
        return Manifest(
            n=int(raw["n"]),
            strata=strata,
            vocabulary=raw.get("vocabulary"),
            exclude_columns=list(raw.get("exclude_columns", [])),
            tfidf=bool(raw.get("tfidf", False)),
            fit_defaults=dict(raw.get("fit_defaults", {})),
            base_dir=path.parent,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed manifest ({exc})") from None


def write_manifest(path: PathLike, manifest: Manifest) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(manifest.to_json(), fh, indent=2)
        fh.write("\n")


@dataclass
class LoadedData:
    dataset: StrataDataset
    vocab: Optional[list] = None
    v_true: Optional[list] = None


def _excluded_indices(manifest: Manifest, vocab: Optional[list]) -> list:
    out = []
    for item in manifest.exclude_columns:
        if isinstance(item, str):
            if vocab is None or item not in vocab:
                raise FormatError(f"cannot exclude column {item!r}: not in vocabulary")
            out.append(vocab.index(item))
        else:
            j = int(item)
            if not 0 <= j < manifest.n:
                raise FormatError(f"excluded column {j} out of range for n={manifest.n}")
            out.append(j)
    return sorted(set(out))


def load_dataset(manifest: Manifest) -> LoadedData:
    """Load every stratum, drop excluded columns, apply TF-IDF if requested."""
    vocab = None
    if manifest.vocabulary is not None:
        vocab = load_vocab(manifest.resolve(manifest.vocabulary))
        if len(vocab) != manifest.n:
            raise FormatError(f"vocabulary has {len(vocab)} tokens, manifest says n={manifest.n}")
    strata, shifts = [], []
    for entry in manifest.strata:
        p = manifest.resolve(entry.path)
        if entry.format == "dense-csv":
            A = load_dense_csv(p)
            if A.shape[1] != manifest.n:
                raise FormatError(f"{p}: {A.shape[1]} columns, manifest says n={manifest.n}")
            if entry.rows is not None and A.shape[0] != entry.rows:
                raise FormatError(f"{p}: {A.shape[0]} rows, manifest says {entry.rows}")
        else:
            A = load_sparse_coo(p, entry.rows, manifest.n)
        strata.append(A)
        if entry.v_true is not None:
            shifts.append(load_dense_csv(manifest.resolve(entry.v_true)).ravel())
    drop = _excluded_indices(manifest, vocab)
    if drop:
        keep = np.setdiff1d(np.arange(manifest.n), drop)
        strata = [A[:, keep] for A in strata]
        shifts = [v[keep] for v in shifts]
        if vocab is not None:
            vocab = [vocab[j] for j in keep]
    if manifest.tfidf:
        strata = tfidf_strata(strata)
    dataset = StrataDataset(tuple(strata), names=tuple(e.name for e in manifest.strata))
    v_true = shifts if len(shifts) == len(strata) else None
    return LoadedData(dataset=dataset, vocab=vocab, v_true=v_true)


# ---------------------------------------------------------------- model store


def save_model(
    model: Model,
    directory: PathLike,
    names: Optional[Sequence[str]] = None,
    config: Optional[FitConfig] = None,
) -> None:
    """Write ``H.csv``, ``W_<i>.csv``, ``v_<i>.csv`` and ``model.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = list(names) if names is not None else [f"stratum_{i}" for i in range(model.n_strata)]
    if len(names) != model.n_strata:
        raise ValueError(f"{len(names)} names for {model.n_strata} strata")
    write_dense_csv(directory / "H.csv", model.H)
    for i, (vi, Wi) in enumerate(zip(model.v, model.W)):
        write_dense_csv(directory / f"W_{i}.csv", Wi)
        write_dense_csv(directory / f"v_{i}.csv", vi)
    meta = {
        "format": "stratnmf-model",
        "version": 1,
        "rank": model.rank,
        "n_cols": int(model.H.shape[1]),
        "strata": [{"name": nm, "rows": int(Wi.shape[0])} for nm, Wi in zip(names, model.W)],
        "rng": RNG_ALGORITHM,
        "config": None if config is None else {
            "rank": config.rank,
            "outer_iters": config.outer_iters,
            "inner_v_updates": config.inner_v_updates,
            "eps": config.eps,
            "seed": config.seed,
            "log_every": config.log_every,
        },
    }
    with (directory / MODEL_META).open("w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_model_metadata(directory: PathLike) -> dict:
    path = Path(directory) / MODEL_META
    if not path.is_file():
        raise FileNotFoundError(f"missing model file {path}")
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def _load_part(path: Path, shape: tuple) -> Array:
    if not path.is_file():
        raise FileNotFoundError(f"missing model file {path}")
    values = load_dense_csv(path)
    if len(shape) == 1:
        values = values.ravel() if values.shape[0] == 1 else values
    if values.shape != shape:
        raise FormatError(f"{path}: shape {values.shape} does not match metadata {shape}")
    return values


def load_model(directory: PathLike) -> Model:
    directory = Path(directory)
    meta = read_model_metadata(directory)
    try:
        r, n = int(meta["rank"]), int(meta["n_cols"])
        rows = [int(s["rows"]) for s in meta["strata"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{directory / MODEL_META}: malformed metadata ({exc})") from None
    H = _load_part(directory / "H.csv", (r, n))
    W = [_load_part(directory / f"W_{i}.csv", (m, r)) for i, m in enumerate(rows)]
    v = [_load_part(directory / f"v_{i}.csv", (n,)) for i in range(len(rows))]
    return Model(v=tuple(v), W=tuple(W), H=H)

