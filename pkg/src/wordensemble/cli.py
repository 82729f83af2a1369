"""Command-line front end.

Subcommands::

    wordensemble combine  IN1 IN2 [...] --method sopp --out combined.vec
    wordensemble eval     --model M.vec [--model ...] --synonyms S.tsv --analogies A.tsv
    wordensemble analyze  COMBINED --inputs IN1 IN2 ... --projections DIR
    wordensemble synth    --out-dir DIR [spec flags]

Exit codes: 0 ok, 2 bad input, 3 no convergence (outputs still written),
4 solver failure, 5 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from wordensemble import __version__
from wordensemble.alignment import (
    CombineConfig,
    EnsembleResult,
    Method,
    ProjectionSet,
    combine,
    residual_error,
)
from wordensemble.analysis import sample_pair_similarities, scatter_distances
from wordensemble.embedding_io import (
    EmbeddingModel,
    align_vocabularies,
    load_matrix,
    load_model,
    save_matrix,
    save_model,
)
from wordensemble.errors import (
    DegenerateGeometryError,
    EmptyEvaluationError,
    EnsembleError,
    FormatError,
    InfeasibleSpecError,
    RankDeficiencyError,
    ShapeError,
    VocabularyError,
)
from wordensemble.evaluation import (
    format_summary,
    load_analogies,
    load_synonyms,
    run_analogy_test,
    run_synonym_test,
    save_analogies,
    save_synonyms,
    write_item_csv,
)
from wordensemble.synthetic import Structure, SyntheticSpec, generate_family

log = logging.getLogger("wordensemble")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_SOLVER = 4
EXIT_USAGE = 5

PROJECTIONS_INDEX = "projections.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ manifest

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(path, command, config, inputs, outputs, started, duration):
    """Run record. ``started_at`` and ``duration_s`` are the only fields that vary between runs."""
    manifest = {
        "command": command,
        "tool": "wordensemble",
        "version": __version__,
        "config": config,
        "inputs": [{"path": str(p), "digest": file_digest(p)} for p in inputs],
        "outputs": [str(p) for p in outputs],
        "started_at": started,
        "duration_s": round(duration, 6),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ------------------------------------------------------------------- combine

def _load_models(paths) -> list[EmbeddingModel]:
    return [load_model(p) for p in paths]


def save_projections(result: EnsembleResult, directory, input_paths) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    width = max(2, len(str(len(result.projections))))
    for i, p in enumerate(result.projections, start=1):
        f = directory / f"P_{i:0{width}d}.txt"
        save_matrix(p, f)
        files.append(f)
    index = {
        "method": result.method.value,
        "iterations": result.iterations,
        "converged": result.converged,
        "inputs": [str(p) for p in input_paths],
        "projections": [f.name for f in files],
    }
    idx = directory / PROJECTIONS_INDEX
    idx.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return files + [idx]


def load_projections(directory) -> tuple[dict, ProjectionSet]:
    directory = Path(directory)
    index_path = directory / PROJECTIONS_INDEX
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
        names = index["projections"]
    except (OSError, ValueError, KeyError) as exc:
        raise FormatError(f"cannot read projection index: {exc}", index_path) from None
    return index, ProjectionSet(tuple(load_matrix(directory / n) for n in names))


def cmd_combine(args) -> int:
    started, t0 = _now(), time.perf_counter()
    try:
        config = CombineConfig(method=args.method, threshold=args.threshold,
                               max_iterations=args.max_iters, init=args.init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(args.inputs) < 2:
        raise UsageError("combine needs at least two input models")

    models = _load_models(args.inputs)
    _, models = align_vocabularies(models)
    result = combine(models, config)

    out = Path(args.out)
    save_model(result.combined, out)
    outputs = [out]
    proj_dir = Path(args.projections_dir) if args.projections_dir else out.with_name(out.stem + "_projections")
    outputs += save_projections(result, proj_dir, args.inputs)
    if args.residuals_csv:
        result.write_residuals_csv(args.residuals_csv)
        outputs.append(Path(args.residuals_csv))

    manifest_path = Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest.json")
    conf = {
        "method": config.method.value,
        "threshold": config.threshold,
        "max_iterations": config.max_iterations,
        "init": config.init.value,
        "iterations": result.iterations,
        "converged": result.converged,
        "final_residual": result.residual_history[-1],
    }
    write_manifest(manifest_path, "combine", conf, args.inputs, outputs, started, time.perf_counter() - t0)
    print(f"{config.method.value}: {result.iterations} iterations, final residual "
          f"{result.residual_history[-1]:.6f}, {'converged' if result.converged else 'NOT converged'}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    started, t0 = _now(), time.perf_counter()
    paths = list(args.model_pos or []) + list(args.model or [])
    if not paths:
        raise UsageError("give at least one model (positional or --model)")
    if not args.synonyms and not args.analogies:
        raise UsageError("give --synonyms and/or --analogies")
    if args.top_n < 1:
        raise UsageError("--top-n must be >= 1")
    syn = load_synonyms(args.synonyms) if args.synonyms else None
    ana = load_analogies(args.analogies) if args.analogies else None

    rows = []
    for p in paths:
        m = load_model(p)
        name = Path(p).stem
        rows.append((
            name,
            run_synonym_test(m, syn, top_n=args.top_n) if syn is not None else None,
            run_analogy_test(m, ana) if ana is not None else None,
        ))
    sys.stdout.write(format_summary(rows))

    outputs = []
    if args.report_csv:
        write_item_csv(args.report_csv, rows)
        outputs.append(Path(args.report_csv))
    manifest_path = args.manifest or (args.report_csv + ".manifest.json" if args.report_csv else None)
    if manifest_path:
        inputs = paths + [p for p in (args.synonyms, args.analogies) if p]
        conf = {"top_n": args.top_n, "models": [r[0] for r in rows]}
        write_manifest(manifest_path, "eval", conf, inputs, outputs, started, time.perf_counter() - t0)
    return EXIT_OK


# ------------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    started, t0 = _now(), time.perf_counter()
    if not args.scatter_csv and not args.pairs_csv:
        raise UsageError("give --scatter-csv and/or --pairs-csv")
    combined = load_model(args.combined)
    index, projections = load_projections(args.projections)
    models = _load_models(args.inputs)
    _, models = align_vocabularies(models)
    if models[0].words != combined.words:
        raise ShapeError("combined model vocabulary differs from the aligned inputs")
    if len(projections) != len(models):
        raise ShapeError(f"{len(models)} inputs but {len(projections)} stored projections")
    for i, (m, p) in enumerate(zip(models, projections)):
        if p.shape != (m.dim, combined.dim):
            raise ShapeError(f"projection {i + 1} has shape {p.shape}, model dim is {m.dim}")

    result = EnsembleResult(
        combined=combined,
        projections=projections,
        residual_history=(residual_error(combined.matrix, models, projections),),
        iterations=int(index.get("iterations", 1)),
        method=Method(index.get("method", "sopp")),
        threshold=0.0,
        converged=bool(index.get("converged", True)),
    )
    outputs = []
    if args.scatter_csv:
        scatter_distances(result, models).write_csv(args.scatter_csv)
        outputs.append(Path(args.scatter_csv))
    if args.pairs_csv:
        try:
            report = sample_pair_similarities(result, models, n_pairs=args.pairs, seed=args.seed,
                                              input_space=args.input_space)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        report.write_csv(args.pairs_csv)
        outputs.append(Path(args.pairs_csv))
    manifest_path = Path(args.manifest) if args.manifest else outputs[0].with_name(outputs[0].name + ".manifest.json")
    conf = {"pairs": args.pairs, "seed": args.seed, "input_space": args.input_space}
    inputs = [args.combined, *args.inputs, Path(args.projections) / PROJECTIONS_INDEX]
    write_manifest(manifest_path, "analyze", conf, inputs, outputs, started, time.perf_counter() - t0)
    return EXIT_OK


# --------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    started, t0 = _now(), time.perf_counter()
    try:
        spec = SyntheticSpec(
            vocab_size=args.vocab_size, dim=args.dim, n_models=args.n_models,
            noise_sigma=args.noise_sigma, seed=args.seed, structure=args.structure,
            n_clusters=args.n_clusters, spread=args.spread, n_synonyms=args.n_synonyms,
            n_relations=args.n_relations, pairs_per_relation=args.pairs_per_relation,
            n_analogies=args.n_analogies,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    family = generate_family(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "ground_truth.vec"]
    save_model(family.ground_truth, files[0])
    width = max(2, len(str(spec.n_models)))
    for i, m in enumerate(family.inputs, start=1):
        f = out / f"model_{i:0{width}d}.vec"
        save_model(m, f)
        files.append(f)
    save_synonyms(family.planted_synonyms, out / "synonyms.tsv")
    save_analogies(family.planted_analogies, out / "analogies.tsv")
    files += [out / "synonyms.tsv", out / "analogies.tsv"]
    conf = {
        "spec": spec.to_dict(),
        "seeds": {"ground_truth": [spec.seed, 0],
                  "models": [[spec.seed, 1, i] for i in range(spec.n_models)]},
    }
    write_manifest(out / "manifest.json", "synth", conf, [], [f.name for f in files],
                   started, time.perf_counter() - t0)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wordensemble", description="Combine word-embedding models into an ensemble.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("combine", help="combine two or more models")
    p.add_argument("inputs", nargs="+", help="input model files (text format)")
    p.add_argument("--method", choices=[m.value for m in Method], default="sopp")
    p.add_argument("--threshold", type=float, default=0.001)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--init", choices=["mean", "first"], default="mean")
    p.add_argument("--out", required=True, help="combined model output file")
    p.add_argument("--residuals-csv", help="write iteration,residual CSV here")
    p.add_argument("--projections-dir", help="default: <out stem>_projections/")
    p.add_argument("--manifest", help="default: <out>.manifest.json")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("eval", help="synonym and analogy tests")
    p.add_argument("model_pos", nargs="*", metavar="MODEL")
    p.add_argument("--model", action="append", help="model file; repeat for several")
    p.add_argument("--synonyms")
    p.add_argument("--analogies")
    p.add_argument("--top-n", type=int, default=1000)
    p.add_argument("--report-csv")
    p.add_argument("--manifest", help="default: <report-csv>.manifest.json when --report-csv is given")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="scatter and pair-similarity CSVs")
    p.add_argument("combined")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--projections", required=True, help="directory written by 'combine'")
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-space", choices=["original", "translated"], default="original")
    p.add_argument("--scatter-csv")
    p.add_argument("--pairs-csv")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic model family")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--n-models", type=int, default=10)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--structure", choices=[s.value for s in Structure], default="clustered")
    p.add_argument("--n-clusters", type=int, default=20)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--n-synonyms", type=int, default=100)
    p.add_argument("--n-relations", type=int, default=3)
    p.add_argument("--pairs-per-relation", type=int, default=20)
    p.add_argument("--n-analogies", type=int, default=200)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wordensemble {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankDeficiencyError, DegenerateGeometryError) as exc:
        print(f"wordensemble {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, FormatError, VocabularyError, ShapeError, EmptyEvaluationError,
            InfeasibleSpecError) as exc:
        print(f"wordensemble {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EnsembleError, ValueError) as exc:
        print(f"wordensemble {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
