"""Command-line front end: profile -> pca -> subset -> correlate/deltas -> report.

Every run writes a ``run_manifest.json`` next to its outputs capturing the
resolved configuration, input hashes, and tool version (no timestamps, so
identical runs produce identical manifests). All randomness derives from the
single ``--seed`` flag via per-purpose seed derivation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import SCHEMA_VERSIONS, __version__
from .analysis import (
    CorrelationEntry,
    CorrelationTable,
    DeltaEntry,
    correlate,
    load_scores_csv,
    subset_delta,
    write_correlations_csv,
    write_deltas_csv,
)
from .corpus import FORMATS, load_dataset, sample_n
from .diversity import BleuConfig
from .errors import CorposcopeError, ConfigError
from .lexical import LexicalConfig
from .pca import PcaModel, build_pca_model
from .profiling import DatasetProfile, ProfileConfig, profile_dataset
from .report import render_heatmap_svg, render_report
from .seeds import derive_seed
from .selection import (
    SubsetSpec,
    build_subsets,
    rank_by_projection,
    rank_by_proxy,
    subset_manifest,
    write_subset_jsonl,
)
from .semantic import ClusterConfig, EmbeddingProviderSpec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"corposcope: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key = value pairs, '#' comments; keys match long flag names."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip().strip('"')
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    for action in parser._actions:
        if action.dest in config:
            raw = config[action.dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            parser.set_defaults(**{action.dest: value})


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=42, help="root seed for all randomness")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("CORPOSCOPE_THREADS", "1")),
        help="worker threads for independent computations (outputs are identical for any value)",
    )
    parser.add_argument("--config", default=None, help="flat key=value config file; flags override")


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="dataset file")
    parser.add_argument("--format", choices=FORMATS, default="jsonl")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--text-field", default=None, help="record field holding the text")
    group.add_argument(
        "--text-template", default=None, help='join template, e.g. "{instruction}\\n{output}"'
    )
    parser.add_argument("--lang", required=True, help="language code (e.g. ar, ja, zh)")
    parser.add_argument("--dataset-id", default=None, help="defaults to the input file stem")
    parser.add_argument("--id-field", default=None, help="record field holding stable sample ids")


def build_parser(config: dict[str, str]) -> _Parser:
    parser = _Parser(prog="corposcope", description=__doc__)
    parser.add_argument("--version", action="version", version=f"corposcope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", parents=[], help="compute a dataset metric profile")
    _add_input_flags(p_profile)
    p_profile.add_argument("--sample", type=int, default=1000, help="sample size (0 = use all records)")
    p_profile.add_argument("--per-sample", action="store_true", help="emit the per-sample feature matrix")
    p_profile.add_argument("--mattr-window", type=int, default=100)
    p_profile.add_argument("--hdd-draw", type=int, default=42)
    p_profile.add_argument("--mtld-threshold", type=float, default=0.72)
    p_profile.add_argument("--bleu-max-ngram", type=int, default=4)
    p_profile.add_argument("--bleu-ref-cap", type=int, default=200)
    p_profile.add_argument("--embedder", choices=("builtin", "http"), default="builtin")
    p_profile.add_argument("--embedder-url", default=None)
    p_profile.add_argument("--embedder-fallback", action="store_true",
                           help="fall back to the builtin embedder if the HTTP provider fails")
    p_profile.add_argument("--svd-rank", type=int, default=256)
    p_profile.add_argument("--kmeans-k", type=int, default=8)
    p_profile.add_argument("--lexical-aggregation", choices=("pooled", "mean"), default="pooled",
                           help="pooled concatenation (default) or mean of per-sample values")
    p_profile.add_argument("--out", required=True, help="profile JSON path")
    _add_common(p_profile)

    p_pca = sub.add_parser("pca", help="fit per-language PCA over dataset profiles")
    p_pca.add_argument("--profiles", required=True, nargs="+",
                       help="profile JSON files or a directory of them")
    p_pca.add_argument("--lang", default=None, help="expected language (validated)")
    p_pca.add_argument("--components", type=int, default=3)
    p_pca.add_argument("--out", required=True, help="pca JSON path")
    _add_common(p_pca)

    p_subset = sub.add_parser("subset", help="build a high/low/random subset along a PC")
    _add_input_flags(p_subset)
    p_subset.add_argument("--profile", required=True, help="profile JSON (with per-sample features)")
    p_subset.add_argument("--pca", required=True, help="pca JSON")
    p_subset.add_argument("--pc", type=int, required=True)
    p_subset.add_argument("--mode", choices=("high", "low", "random"), required=True)
    p_subset.add_argument("--size", type=int, default=2000)
    p_subset.add_argument("--ranking", choices=("proxy", "projection"), default="projection")
    p_subset.add_argument("--out", required=True, help="subset JSONL path")
    _add_common(p_subset)

    p_corr = sub.add_parser("correlate", help="correlate PC scores with benchmark scores")
    p_corr.add_argument("--pca", required=True)
    p_corr.add_argument("--scores", required=True, help="scores CSV")
    p_corr.add_argument("--out", required=True, help="output directory")
    _add_common(p_corr)

    p_delta = sub.add_parser("deltas", help="mean subset-minus-random performance deltas")
    p_delta.add_argument("--scores", required=True, help="subset scores CSV (with pc and mode)")
    p_delta.add_argument("--out", required=True, help="deltas CSV path")
    _add_common(p_delta)

    p_report = sub.add_parser("report", help="render the summary tables")
    p_report.add_argument("--pca", required=True)
    p_report.add_argument("--correlations", default=None, help="correlations CSV from `correlate`")
    p_report.add_argument("--deltas", default=None, help="deltas CSV from `deltas`")
    p_report.add_argument("--out", required=True, help="report markdown path")
    _add_common(p_report)

    p_schema = sub.add_parser("schema", help="print artifact JSON schemas")
    p_schema.add_argument("--out", default=None)
    _add_common(p_schema)

    if config:
        for sp in sub.choices.values():
            _apply_config_defaults(sp, config)
    return parser


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(args: argparse.Namespace, out_dir: Path, inputs: list[Path]) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("command",) and v is not None
    }
    manifest = {
        "schema_version": SCHEMA_VERSIONS["run_manifest"],
        "tool_version": __version__,
        "command": args.command,
        "resolved_config": {k: str(v) if isinstance(v, Path) else v for k, v in resolved.items()},
        "input_hashes": {str(p): _sha256_file(p) for p in inputs},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _load_handle(args: argparse.Namespace):
    text_spec = args.text_template or args.text_field or "text"
    return load_dataset(
        args.input,
        format=args.format,
        text_spec=text_spec,
        language=args.lang,
        dataset_id=args.dataset_id,
        id_field=args.id_field,
    )


def _profile_config(args: argparse.Namespace) -> ProfileConfig:
    embedder_kind = "builtin_svd" if args.embedder == "builtin" else "external_http"
    return ProfileConfig(
        lexical=LexicalConfig(
            mattr_window=args.mattr_window,
            hdd_draw=args.hdd_draw,
            mtld_threshold=args.mtld_threshold,
        ),
        bleu=BleuConfig(
            max_ngram=args.bleu_max_ngram,
            reference_cap=args.bleu_ref_cap,
            reference_seed=derive_seed(args.seed, "bleu"),
        ),
        embedding=EmbeddingProviderSpec(
            kind=embedder_kind,
            svd_rank=args.svd_rank,
            seed=derive_seed(args.seed, "svd"),
            endpoint=args.embedder_url,
        ),
        cluster=ClusterConfig(k=args.kmeans_k, seed=derive_seed(args.seed, "kmeans")),
        pooled_lexical=args.lexical_aggregation == "pooled",
        http_fallback_builtin=args.embedder_fallback,
    )


def _cmd_profile(args: argparse.Namespace) -> int:
    handle = _load_handle(args)
    if args.sample > 0:
        handle = sample_n(handle, args.sample, derive_seed(args.seed, "sample"))
    config = _profile_config(args)
    profile = profile_dataset(
        handle, config, with_per_sample=args.per_sample, threads=max(1, args.threads)
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(profile.to_json() + "\n", encoding="utf-8")
    _write_run_manifest(args, out.parent, [Path(args.input)])
    if handle.skip_count:
        print(f"skipped {handle.skip_count} empty records", file=sys.stderr)
    return 0


def _collect_profile_paths(specs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            paths.extend(
                f
                for f in sorted(p.glob("*.json"))
                if f.name != "run_manifest.json" and not f.name.endswith(".manifest.json")
            )
        elif p.is_file():
            paths.append(p)
        else:
            raise ConfigError(f"profile path does not exist: {spec}")
    if not paths:
        raise ConfigError("no profile JSON files found")
    return paths


def _load_profile(path: Path) -> DatasetProfile:
    return DatasetProfile.from_json_dict(json.loads(path.read_text(encoding="utf-8")))


def _cmd_pca(args: argparse.Namespace) -> int:
    paths = _collect_profile_paths(args.profiles)
    profiles = [_load_profile(p) for p in paths]
    if args.lang is not None:
        found = sorted({p.language for p in profiles})
        if found != [args.lang]:
            raise ConfigError(
                f"profiles have language(s) {', '.join(found)}; expected {args.lang}"
            )
    model = build_pca_model(profiles, n_components=args.components)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(model.to_json() + "\n", encoding="utf-8")
    _write_run_manifest(args, out.parent, paths)
    return 0


def _load_pca(path: str) -> PcaModel:
    return PcaModel.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _cmd_subset(args: argparse.Namespace) -> int:
    handle = _load_handle(args)
    profile = _load_profile(Path(args.profile))
    model = _load_pca(args.pca)
    if profile.dataset_id != handle.dataset_id:
        raise ConfigError(
            f"profile is for dataset {profile.dataset_id!r}, input is {handle.dataset_id!r}"
        )
    if profile.language != handle.language:
        raise ConfigError(
            f"profile language {profile.language!r} does not match --lang {handle.language!r}"
        )
    if profile.config_fingerprint != model.config_fingerprint:
        raise ConfigError(
            "config fingerprint mismatch between profile and pca artifacts: "
            f"{profile.config_fingerprint} != {model.config_fingerprint}"
        )
    ranking_name = "proxy_metric" if args.ranking == "proxy" else "pc_projection"
    spec = SubsetSpec(
        dataset_id=handle.dataset_id,
        pc=args.pc,
        mode=args.mode,
        size=args.size,
        ranking=ranking_name,
        seed=derive_seed(args.seed, "subset-random", handle.dataset_id, args.pc),
    )
    if ranking_name == "proxy_metric":
        ranking = rank_by_proxy(profile, model, args.pc)
    else:
        ranking = rank_by_projection(profile, model, args.pc)
    result = build_subsets(handle, ranking, spec)
    ids = getattr(result, args.mode)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_subset_jsonl(handle, ids, out)
    manifest = subset_manifest(spec, ids, ranking, config_fingerprint=profile.config_fingerprint)
    manifest_path = out.with_suffix(".manifest.json") if out.suffix else Path(str(out) + ".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(args, out.parent, [Path(args.input), Path(args.profile), Path(args.pca)])
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    model = _load_pca(args.pca)
    scores = load_scores_csv(args.scores)
    table = correlate(model, scores)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_correlations_csv(table, out_dir / "correlations.csv")
    heat = table.heatmap(model.n_components)
    heat["config_fingerprint"] = model.config_fingerprint
    (out_dir / "heatmap.json").write_text(
        json.dumps(heat, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (out_dir / "heatmap.svg").write_text(
        render_heatmap_svg(heat["rows"], heat["columns"], heat["values"]) + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(args, out_dir, [Path(args.pca), Path(args.scores)])
    for note in table.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def _cmd_deltas(args: argparse.Namespace) -> int:
    scores = load_scores_csv(args.scores)
    entries, notes = subset_delta(scores)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_deltas_csv(entries, out)
    _write_run_manifest(args, out.parent, [Path(args.scores)])
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def _load_correlations_csv(path: str) -> CorrelationTable:
    import csv as _csv

    entries = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in _csv.DictReader(fh):
            entries.append(
                CorrelationEntry(
                    benchmark=row["benchmark"],
                    model=row["model"],
                    pc=int(row["pc"]),
                    r=float(row["r"]),
                    n=int(row["n"]),
                )
            )
    return CorrelationTable(entries=tuple(entries), warnings=())


def _load_deltas_csv(path: str) -> tuple[DeltaEntry, ...]:
    import csv as _csv

    entries = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in _csv.DictReader(fh):
            entries.append(
                DeltaEntry(
                    model=row["model"],
                    pc=int(row["pc"]),
                    mode=row["mode"],
                    mean_delta=float(row["mean_delta"]),
                    n_groups=int(row["n_groups"]),
                )
            )
    return tuple(entries)


def _cmd_report(args: argparse.Namespace) -> int:
    model = _load_pca(args.pca)
    correlations = _load_correlations_csv(args.correlations) if args.correlations else None
    deltas = _load_deltas_csv(args.deltas) if args.deltas else None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_report(model, correlations, deltas) + "\n", encoding="utf-8")
    inputs = [Path(args.pca)]
    if args.correlations:
        inputs.append(Path(args.correlations))
    if args.deltas:
        inputs.append(Path(args.deltas))
    _write_run_manifest(args, out.parent, inputs)
    return 0


SCHEMAS = {
    "profile": {
        "schema_version": SCHEMA_VERSIONS["profile"],
        "fields": {
            "dataset_id": "string",
            "language": "string",
            "n_samples": "int",
            "sample_seed": "int|null",
            "config_fingerprint": "string",
            "metrics": {name: "float|null" for name in (
                "distinct1", "distinct2", "self_bleu", "ttr", "mattr",
                "hdd", "mtld", "cos_embed", "cos_tfidf", "silhouette")},
            "per_sample?": {"ids": ["string"], "columns": ["string x10"], "rows": [["float|null x10"]]},
        },
    },
    "pca": {
        "schema_version": SCHEMA_VERSIONS["pca"],
        "fields": {
            "language": "string",
            "metric_order": ["string x10"],
            "scaler": {"means": ["float"], "stds": ["float"], "constant_flags": ["bool"]},
            "loadings": [["float x10"]],
            "explained_variance_ratio": ["float"],
            "dataset_scores": {"<dataset_id>": ["float"]},
            "category_contributions": [["float x4"]],
            "config_fingerprint": "string",
            "n_datasets": "int",
        },
    },
    "subset_manifest": {
        "schema_version": SCHEMA_VERSIONS["subset_manifest"],
        "fields": {
            "dataset_id": "string", "pc": "int", "mode": "high|low|random",
            "ranking": "proxy_metric|pc_projection", "size": "int", "seed": "int",
            "score_stats": {"min": "float", "max": "float", "mean": "float"},
        },
    },
    "scores_csv": {
        "header": "dataset_id,benchmark,model,score[,category][,pc][,mode]",
        "category": "knowledge|values|norms (optional pass-through)",
    },
    "correlations_csv": {"header": "benchmark,model,pc,r,n"},
    "deltas_csv": {"header": "model,pc,mode,mean_delta,n_groups"},
}


def _cmd_schema(args: argparse.Namespace) -> int:
    text = json.dumps(SCHEMAS, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


_COMMANDS = {
    "profile": _cmd_profile,
    "pca": _cmd_pca,
    "subset": _cmd_subset,
    "correlate": _cmd_correlate,
    "deltas": _cmd_deltas,
    "report": _cmd_report,
    "schema": _cmd_schema,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    config: dict[str, str] = {}
    if "--config" in argv:
        try:
            config_path = argv[argv.index("--config") + 1]
        except IndexError:
            print("corposcope: error: --config requires a path", file=sys.stderr)
            return 1
        try:
            config = _read_config_file(config_path)
        except (OSError, CorposcopeError) as exc:
            print(f"corposcope: error: {exc}", file=sys.stderr)
            return 1
    parser = build_parser(config)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CorposcopeError as exc:
        print(f"corposcope: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"corposcope: internal-error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
