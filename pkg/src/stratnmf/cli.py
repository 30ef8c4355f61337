"""Command-line front end.

Subcommands::

    stratnmf synth --preset paper --out data/
    stratnmf fit data/manifest.json --out run/
    stratnmf report run/ --k 3 --vocab vocab.txt

Everything is written as plain CSV/JSON, ready for plotting. Exit codes: 0 on
success, 1 for invalid input or arguments, 2 for I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .datagen import SyntheticSpec, generate, ladder_shifts, paper_spec
from .engine import RNG_ALGORITHM, FitConfig, fit
from .ingest import (
    Manifest,
    StratumEntry,
    load_dataset,
    load_manifest,
    load_model,
    load_vocab,
    read_model_metadata,
    save_model,
    write_dense_csv,
    write_manifest,
)
from .report import ZeroShiftError, normalize_shift, topk_features

logger = logging.getLogger("stratnmf")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

DEFAULT_ITERS = 100
PAPER_ITERS = 10000


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- fit


def cmd_fit(args) -> dict:
    manifest = load_manifest(args.manifest)
    data = load_dataset(manifest)
    dataset = data.dataset
    defaults = manifest.fit_defaults

    rank = args.rank if args.rank is not None else defaults.get("rank")
    if rank is None:
        raise ValueError("--rank is required (the manifest has no default rank)")
    iters = args.iters if args.iters is not None else defaults.get("iters", DEFAULT_ITERS)
    config = FitConfig(
        rank=int(rank),
        outer_iters=int(iters),
        inner_v_updates=args.v_updates,
        eps=args.eps,
        seed=args.seed,
        log_every=args.log_every,
    )
    logger.info("fitting %d strata, n=%d, rank=%d, %d iterations",
                dataset.n_strata, dataset.n_cols, config.rank, config.outer_iters)

    start = time.perf_counter()
    model, trace = fit(dataset, config)
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out, names=dataset.names, config=config)

    with (out / "loss_trace.csv").open("w", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["iteration", "loss", "normalized_loss"])
        for it, lo, nl in zip(trace.iterations, trace.loss, trace.normalized_loss):
            w.writerow([it, repr(lo), repr(nl)])

    with (out / "strata_means_trace.csv").open("w", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["iteration", *dataset.names])
        for it, means in zip(trace.iterations, trace.strata_means):
            w.writerow([it, *map(repr, means)])

    final_means = trace.strata_means[-1]
    planted = None if data.v_true is None else [float(np.mean(v)) for v in data.v_true]
    with (out / "strata_means.csv").open("w", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["stratum", "name", "mean"] + (["v_true_mean"] if planted else []))
        for i, (name, mean) in enumerate(zip(dataset.names, final_means)):
            w.writerow([i, name, repr(mean)] + ([repr(planted[i])] if planted else []))

    outputs = ["H.csv", "model.json", "loss_trace.csv", "strata_means.csv",
               "strata_means_trace.csv", "report.json", "timing.json"]
    outputs[1:1] = [f"{p}_{i}.csv" for i in range(dataset.n_strata) for p in ("W", "v")]
    report = {
        "config": {
            "manifest": str(args.manifest),
            "rank": config.rank,
            "iters": config.outer_iters,
            "v_updates": config.inner_v_updates,
            "eps": config.eps,
            "seed": config.seed,
            "log_every": config.log_every,
            "rng": RNG_ALGORITHM,
        },
        "final_loss": trace.loss[-1],
        "final_normalized_loss": trace.normalized_loss[-1],
        "strata": [
            {"name": name, "v_mean": mean, **({"v_true_mean": planted[i]} if planted else {})}
            for i, (name, mean) in enumerate(zip(dataset.names, final_means))
        ],
        "outputs": outputs,
    }
    _write_json(out / "report.json", report)
    # kept apart from report.json so every other output is reproducible byte for byte
    _write_json(out / "timing.json", {"wall_clock_seconds": elapsed})

    print(f"loss {trace.loss[-1]:.6g}  normalized loss {trace.normalized_loss[-1]:.6g}  "
          f"({config.outer_iters} iterations, {elapsed:.1f}s)")
    for name, mean in zip(dataset.names, final_means):
        print(f"  {name}: mean v = {mean:.4f}")
    return report


# ---------------------------------------------------------------- synth


def _parse_shifts(text: str, n_strata: int) -> tuple:
    if text == "ladder":
        return ladder_shifts(n_strata)
    low, high = [], []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            low.append(float(lo))
            high.append(float(hi))
        except ValueError:
            raise ValueError(f"bad shift bound {part!r}; expected LOW:HIGH") from None
    if len(low) == 1 and n_strata > 1:
        low, high = low * n_strata, high * n_strata
    return tuple(low), tuple(high)


def cmd_synth(args) -> Manifest:
    if args.preset == "paper":
        spec = paper_spec(seed=args.seed)
        fit_defaults = {"rank": spec.inner_rank, "iters": PAPER_ITERS}
    else:
        low, high = _parse_shifts(args.shifts, args.strata)
        spec = SyntheticSpec(
            n_strata=args.strata, rows=args.rows, cols=args.cols,
            inner_rank=args.inner_rank, shift_low=low, shift_high=high,
            seed=args.seed, shared_topics=not args.separate_topics,
        )
        fit_defaults = {}
    names = [f"stratum_{i + 1}" for i in range(spec.n_strata)]
    synthetic = generate(spec, names=names)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, A, v in zip(names, synthetic.dataset.strata, synthetic.v_true):
        write_dense_csv(out / f"{name}.csv", A)
        write_dense_csv(out / f"v_true_{name}.csv", v)
        entries.append(StratumEntry(name=name, path=f"{name}.csv", v_true=f"v_true_{name}.csv"))
    manifest = Manifest(n=spec.cols, strata=entries, fit_defaults=fit_defaults, base_dir=out)
    write_manifest(out / "manifest.json", manifest)
    print(f"wrote {spec.n_strata} strata of shape {spec.rows}x{spec.cols} to {out}")
    return manifest


# ---------------------------------------------------------------- report


def cmd_report(args) -> int:
    model_dir = Path(args.model_dir)
    model = load_model(model_dir)
    names = [s["name"] for s in read_model_metadata(model_dir)["strata"]]
    n = model.H.shape[1]
    if args.k < 0 or args.k > n:
        raise ValueError(f"--k must be between 0 and n={n}, got {args.k}")
    vocab = load_vocab(args.vocab) if args.vocab else None
    if vocab is not None and len(vocab) != n:
        raise ValueError(f"vocabulary has {len(vocab)} tokens, model has {n} columns")
    out = Path(args.out) if args.out else model_dir
    out.mkdir(parents=True, exist_ok=True)

    labels = vocab if vocab is not None else [str(j) for j in range(n)]
    with (out / "normalized_v.csv").open("w", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["stratum", "name", *labels])
        for i, (name, vi) in enumerate(zip(names, model.v)):
            try:
                normed = normalize_shift(vi, i)
            except ZeroShiftError:
                print(f"warning: v for stratum {i} ({name}) sums to zero; not normalized",
                      file=sys.stderr)
                continue
            w.writerow([i, name, *map(repr, normed.tolist())])

    with (out / "topk.csv").open("w", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["stratum", "name", "rank", "feature", "weight"])
        for i, name in enumerate(names):
            if args.k == 0:
                continue
            for rank, (feature, weight) in enumerate(topk_features(model, i, args.k, vocab), start=1):
                w.writerow([i, name, rank, feature, repr(weight)])
    print(f"wrote normalized_v.csv and topk.csv to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratnmf",
        description="Stratified non-negative matrix factorization",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to the strata listed in a manifest")
    p.add_argument("manifest", help="manifest JSON file")
    p.add_argument("--rank", type=int, default=None,
                   help="number of shared topics (required unless the manifest sets one)")
    p.add_argument("--iters", type=int, default=None,
                   help=f"outer iterations (default: manifest value or {DEFAULT_ITERS})")
    p.add_argument("--v-updates", type=int, default=2, help="shift updates per iteration (default: 2)")
    p.add_argument("--eps", type=float, default=1e-9, help="denominator guard (default: 1e-9)")
    p.add_argument("--seed", type=int, default=0, help="initialization seed (default: 0)")
    p.add_argument("--log-every", type=int, default=1, help="trace cadence in iterations (default: 1)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate synthetic strata with planted shifts")
    p.add_argument("--preset", choices=["paper"], default=None,
                   help="'paper': 4 strata of 100x100, inner rank 5, shifts on [i-1, i]")
    p.add_argument("--strata", type=int, default=4)
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--cols", type=int, default=100)
    p.add_argument("--inner-rank", type=int, default=5)
    p.add_argument("--shifts", default="ladder",
                   help="'ladder' for [i-1, i], or LOW:HIGH[,LOW:HIGH...] per stratum")
    p.add_argument("--separate-topics", action="store_true",
                   help="draw a separate topic matrix for every stratum")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="normalized shifts and top-k features of a fitted model")
    p.add_argument("model_dir", help="directory written by 'fit'")
    p.add_argument("--k", type=int, default=3, help="features per stratum (default: 3)")
    p.add_argument("--vocab", default=None, help="vocabulary file, one token per line")
    p.add_argument("--out", default=None, help="output directory (default: model_dir)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "fit":
            cmd_fit(args)
            return EXIT_OK
        if args.command == "synth":
            cmd_synth(args)
            return EXIT_OK
        return cmd_report(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
