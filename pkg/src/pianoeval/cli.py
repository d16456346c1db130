"""Command-line front end.

Every subcommand builds the same request models the HTTP service accepts
and either calls the handlers in-process (the default) or, with
--server URL, sends them to a running service.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import CliConfig, config_as_dict, load_config
from .features import load_feature_csv, save_feature_csv
from .measure import load_training_csv, model_from_dict, save_model
from .service import handlers, schemas
from .smf import parse_smf, performance_to_table

MIDI_SUFFIXES = (".mid", ".midi")


class CliError(Exception):
    """Runtime failure; the message becomes the one-line diagnostic."""


def _send(args, endpoint: str, handler, request, response_type):
    """Dispatch a request in-process or to a remote service."""
    if getattr(args, "server", None):
        import httpx

        url = args.server.rstrip("/") + endpoint
        resp = httpx.post(url, json=request.model_dump(by_alias=True), timeout=300.0)
        if resp.status_code != 200:
            detail = resp.json().get("detail", resp.text) if resp.content else resp.text
            raise CliError(f"server returned {resp.status_code}: {detail}")
        return response_type.model_validate(resp.json())
    return handler(request)


def _load_performance(path) -> list[schemas.NoteModel]:
    path = Path(path)
    if not path.is_file():
        raise CliError(f"no such file: {path}")
    perf = parse_smf(path.read_bytes())
    return handlers.performance_to_notes(perf)


def _load_model_doc(path) -> schemas.ModelDocument:
    path = Path(path)
    if not path.is_file():
        raise CliError(f"no such file: {path}")
    with open(path) as fh:
        doc = json.load(fh)
    model_from_dict(doc)  # validate eagerly for a clean diagnostic
    return schemas.ModelDocument(**doc)


def _midi_files(directory: Path) -> dict[str, Path]:
    return {
        p.stem: p
        for p in sorted(directory.iterdir())
        if p.suffix.lower() in MIDI_SUFFIXES
    }


def _tolerances(cfg: CliConfig) -> schemas.ToleranceModel:
    return schemas.ToleranceModel(
        onset_tol=cfg.onset_tol,
        offset_tol=cfg.offset_tol,
        pitch_tol=cfg.pitch_tol,
        velocity_tol=cfg.velocity_tol,
    )


def _provenance_dict(args) -> dict:
    return {"tool_version": __version__, "config": config_as_dict(args.cfg)}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _evaluate_one(args, name, ref_path, est_path, model_doc):
    req = schemas.EvaluateRequest(
        ref=_load_performance(ref_path),
        est=_load_performance(est_path),
        tolerances=_tolerances(args.cfg),
        model=model_doc,
    )
    resp = _send(args, "/evaluate", handlers.evaluate, req, schemas.EvaluateResponse)
    return name, resp


def cmd_evaluate(args) -> int:
    ref_path, est_path = Path(args.ref), Path(args.est)
    model_doc = _load_model_doc(args.model) if args.model else None

    if ref_path.is_dir() != est_path.is_dir():
        raise CliError("--ref and --est must both be files or both be directories")
    if ref_path.is_dir():
        refs = _midi_files(ref_path)
        ests = _midi_files(est_path)
        names = sorted(set(refs) & set(ests))
        if not names:
            raise CliError("no matching basenames between the two directories")
        with ThreadPoolExecutor() as pool:
            results = list(
                pool.map(
                    lambda name: _evaluate_one(args, name, refs[name], ests[name], model_doc),
                    names,
                )
            )
        results.sort(key=lambda pair: pair[0])
    else:
        results = [_evaluate_one(args, ref_path.stem, ref_path, est_path, model_doc)]

    if args.json:
        payload = {
            "pairs": [
                {"name": name, **resp.model_dump(exclude={"tool_version"})}
                for name, resp in results
            ],
            **_provenance_dict(args),
        }
        print(json.dumps(payload, indent=2))
    else:
        for name, resp in results:
            line = f"P={resp.precision:.6g} R={resp.recall:.6g} F={resp.f_measure:.6g}"
            if resp.score is not None:
                line += f" score={resp.score:.6g}"
            if len(results) > 1:
                line = f"{name}: {line}"
            print(line)
    return 0


def cmd_features(args) -> int:
    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise CliError(f"no such directory: {in_dir}")
    files = _midi_files(in_dir)
    if not files:
        raise CliError(f"no MIDI files in {in_dir}")
    matrix, provenance = [], []
    names = None
    for stem in sorted(files):
        req = schemas.FeaturesRequest(
            notes=_load_performance(files[stem]), length=args.cfg.length, hop=args.cfg.hop
        )
        resp = _send(args, "/features", handlers.features, req, schemas.FeaturesResponse)
        names = resp.feature_names
        for window in resp.windows:
            matrix.append(window.values)
            provenance.append((files[stem].name, window.start))
    save_feature_csv(args.out, matrix, names, provenance)
    print(f"wrote {len(matrix)} windows from {len(files)} files to {args.out}")
    return 0


def cmd_train(args) -> int:
    X, y = load_training_csv(args.data)
    standardization = None
    if args.standardization:
        with open(args.standardization) as fh:
            doc = json.load(fh)
        standardization = schemas.StandardizationModel(**doc)
    req = schemas.TrainRequest(
        rows=X.tolist(),
        ratings=y.tolist(),
        grid_lambda=args.cfg.grid_lambda,
        grid_alpha=args.cfg.grid_alpha,
        lam=args.lam,
        alpha=args.alpha,
        tol=args.cfg.enet_tol,
        max_iter=args.cfg.max_iter,
        prune_threshold=args.cfg.prune_threshold,
        standardization=standardization,
    )
    resp = _send(args, "/train", handlers.train, req, schemas.TrainResponse)
    save_model(model_from_dict(resp.model.model_dump(by_alias=True)), args.out)
    chosen = resp.model.training_config
    print(
        f"wrote {args.out}: lambda={chosen.lam} alpha={chosen.alpha} "
        f"loo_l1={resp.loo_l1:.6g} active={sum(resp.model.active_mask)}/17"
    )
    return 0


def cmd_select(args) -> int:
    features_path = Path(args.features)
    if not features_path.is_file():
        raise CliError(f"no such file: {features_path}")
    matrix, names, provenance = load_feature_csv(features_path)
    if matrix.shape[0] == 0:
        raise CliError(f"{features_path}: no data rows")
    p = args.p if args.p is not None else args.cfg.p
    if p is None:
        raise CliError("--p is required (or set p in the config file)")
    req = schemas.SelectRequest(
        matrix=matrix.tolist(),
        feature_names=names,
        provenance=[
            schemas.ProvenanceModel(source=s, window_start=w) for s, w in provenance
        ]
        if provenance
        else None,
        p=p,
        method=args.method or args.cfg.method,
        medoid=args.medoid or args.cfg.medoid,
        metric=args.cfg.metric,
        pca_variance=args.cfg.pca_variance,
        centroid_excludes=args.cfg.centroid_excludes,
    )
    resp = _send(args, "/select", handlers.select, req, schemas.SelectResponse)
    payload = {
        "indices": resp.indices,
        "min_pairwise": resp.min_pairwise,
        "method": resp.method,
        "pca_components_kept": resp.pca_components_kept,
        "selected": [s.model_dump() for s in resp.selected],
        **_provenance_dict(args),
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_align(args) -> int:
    req = schemas.AlignRequest(
        ref=_load_performance(args.ref),
        est=_load_performance(args.est),
        radius=args.cfg.radius,
        frame_rate=args.cfg.frame_rate,
        feature=args.cfg.align_feature,
    )
    resp = _send(args, "/align", handlers.align, req, schemas.AlignResponse)
    perf = handlers.notes_to_performance(resp.notes)
    Path(args.out).write_text(performance_to_table(perf))
    print(f"wrote {args.out}: {len(perf)} notes, path cost {resp.cost:.6g}")
    return 0


def _load_measures_csv(path) -> list[schemas.MeasureValueModel]:
    expected = ("task", "excerpt_id", "method", "value")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in expected if c not in (reader.fieldnames or [])]
        if missing:
            raise CliError(f"{path}: missing columns: {', '.join(missing)}")
        out = []
        for line_no, row in enumerate(reader, start=2):
            try:
                value = float(row["value"])
            except ValueError:
                raise CliError(f"{path}: row {line_no}: non-numeric value") from None
            out.append(
                schemas.MeasureValueModel(
                    task=row["task"],
                    excerpt_id=row["excerpt_id"],
                    method=row["method"],
                    value=value,
                )
            )
    return out


def cmd_analyze(args) -> int:
    from .analysis import load_and_filter_ratings

    ratings_path = Path(args.ratings)
    if not ratings_path.is_file():
        raise CliError(f"no such file: {ratings_path}")
    table = load_and_filter_ratings(ratings_path)
    rows = [
        schemas.RatingRowModel(
            subject_id=r.subject_id,
            task=r.task,
            excerpt_id=r.excerpt_id,
            method=r.method,
            rating=r.rating,
            listen_seconds=r.listen_seconds,
            moved_cursor=r.moved_cursor,
        )
        for r in table.rows
    ]
    measures = _load_measures_csv(args.measures) if args.measures else None
    req = schemas.AnalyzeRequest(
        rows=rows,
        measures=measures,
        confidence=args.cfg.confidence,
        resamples=args.cfg.resamples,
        seed=args.seed if args.seed is not None else args.cfg.seed,
    )
    resp = _send(args, "/analyze", handlers.analyze, req, schemas.AnalyzeResponse)
    report = resp.report
    # filtering happened CLI-side; restore its counts in the report
    report["dropped"] = {
        "listen_seconds": table.dropped_listen,
        "moved_cursor": table.dropped_cursor,
        "kept": len(table.rows),
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pianoeval",
        description="Perceptual evaluation toolkit for piano transcription resynthesis.",
    )
    parser.add_argument("--version", action="version", version=f"pianoeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file overriding built-in defaults")
        p.add_argument("--server", help="route the request to a running service URL")

    p = sub.add_parser("evaluate", help="objective and perceptual scores for ref/est MIDI")
    p.add_argument("--ref", required=True, help="reference MIDI file or directory")
    p.add_argument("--est", required=True, help="estimated MIDI file or directory")
    p.add_argument("--model", help="perceptual model JSON for the learned score")
    p.add_argument("--json", action="store_true", help="emit a single JSON object")
    p.add_argument("--onset-tol", type=float, dest="onset_tol")
    p.add_argument("--offset-tol", type=float, dest="offset_tol")
    p.add_argument("--pitch-tol", type=float, dest="pitch_tol")
    p.add_argument("--velocity-tol", type=float, dest="velocity_tol")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", help="window MIDI files and extract feature vectors")
    p.add_argument("--in", required=True, dest="in_dir", help="directory of MIDI files")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--length", type=float, help="window length in seconds")
    p.add_argument("--hop", type=float, help="window hop in seconds")
    common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit the perceptual model from a training CSV")
    p.add_argument("--data", required=True, help="CSV with the 17 input columns and rating")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--standardization", help="JSON file with corpus mean/std")
    p.add_argument("--lambda", type=float, dest="lam", help="fix lambda (skips the grid)")
    p.add_argument("--alpha", type=float, help="fix alpha (skips the grid)")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select", help="pick dispersed excerpt windows from a feature CSV")
    p.add_argument("--features", required=True, help="feature CSV (extra columns accepted)")
    p.add_argument("--p", type=int, help="number of dispersed windows")
    p.add_argument("--method", choices=["A", "B", "C", "D"], help="selection criterion")
    p.add_argument("--medoid", action="store_true", help="append the corpus medoid")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("align", help="realign an estimate's note times to a reference")
    p.add_argument("--ref", required=True, help="reference MIDI file")
    p.add_argument("--est", required=True, help="MIDI file to realign")
    p.add_argument("--out", required=True, help="output note table path")
    p.add_argument("--radius", type=int, help="refinement radius")
    p.add_argument("--frame-rate", type=float, dest="frame_rate")
    p.add_argument(
        "--feature", choices=["onset-count", "pianoroll"], dest="align_feature"
    )
    common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("analyze", help="filter, aggregate and correlate listening-test ratings")
    p.add_argument("--ratings", required=True, help="ratings CSV")
    p.add_argument("--measures", help="CSV of measure values to correlate against")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.add_argument("--seed", type=int, help="bootstrap seed")
    p.add_argument("--resamples", type=int)
    p.add_argument("--confidence", type=float)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--model", help="model JSON loaded as the /evaluate default")
    p.set_defaults(func=cmd_serve)

    return parser


_FLAG_OVERRIDES = (
    "onset_tol",
    "offset_tol",
    "pitch_tol",
    "velocity_tol",
    "length",
    "hop",
    "radius",
    "frame_rate",
    "align_feature",
    "resamples",
    "confidence",
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command != "serve":
            args.cfg = load_config(args.config)
            for name in _FLAG_OVERRIDES:
                value = getattr(args, name, None)
                if value is not None:
                    setattr(args.cfg, name, value)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
