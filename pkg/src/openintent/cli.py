"""Command-line entry points for experiments and prediction."""

import dataclasses
import json
import sys
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .datasets import infer_corpus_format, load_corpus
from .encoder import load_embeddings
from .harness import (
    ExperimentConfig,
    collect_manifests,
    format_results_table,
    run_experiment,
    run_labeled_ratio_study,
    run_radius_ablation,
)
from .model_io import load_model
from .synthetic import SyntheticConfig


def parse_seeds(text):
    """Parse '3', '0,1,2' or '0-9' into a tuple of seeds."""
    seeds = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if "-" in piece and not piece.startswith("-"):
            low, high = piece.split("-", 1)
            seeds.extend(range(int(low), int(high) + 1))
        elif piece:
            seeds.append(int(piece))
    if not seeds:
        raise click.BadParameter(f"no seeds in {text!r}")
    return tuple(seeds)


def parse_floats(text):
    return [float(piece) for piece in str(text).split(",") if piece.strip()]


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def build_config(config_path, **overrides):
    """Merge a TOML config file with CLI flag overrides (flags win)."""
    data = {}
    if config_path:
        with open(config_path, "rb") as handle:
            loaded = tomllib.load(handle)
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise click.BadParameter(
                f"unknown config keys {sorted(unknown)} in {config_path}"
            )
        data.update(loaded)
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if isinstance(data.get("synthetic"), dict):
        data["synthetic"] = SyntheticConfig(**data["synthetic"])
    if "seeds" in data and not isinstance(data["seeds"], (list, tuple)):
        data["seeds"] = parse_seeds(data["seeds"])
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        raise click.BadParameter(str(exc))


def experiment_options(command):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="TOML config file; flags override it."),
        click.option("--data-dir", "data_dir", default=None),
        click.option("--dataset", default=None,
                     help="Dataset directory name, or 'synthetic'."),
        click.option("--method", type=click.Choice(["da_adb", "adb", "msp"]),
                     default=None),
        click.option("--known-ratio", "known_ratio", type=float, default=None),
        click.option("--labeled-ratio", "labeled_ratio", type=float, default=None),
        click.option("--seeds", default=None, help="e.g. '0', '0,1,2' or '0-9'."),
        click.option("--seed", type=int, default=None, help="Single-seed shorthand."),
        click.option("--encoder", type=click.Choice(["bow", "emb"]), default=None),
        click.option("--feature-dim", "feature_dim", type=int, default=None),
        click.option("--hash-dim", "hash_dim", type=int, default=None),
        click.option("--hash-seed", "hash_seed", type=int, default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--rep-lr", "rep_lr", type=float, default=None),
        click.option("--batch-size", "batch_size", type=int, default=None),
        click.option("--max-epochs", "max_epochs", type=int, default=None),
        click.option("--patience", type=int, default=None),
        click.option("--boundary-lr", "boundary_lr", type=float, default=None),
        click.option("--boundary-max-epochs", "boundary_max_epochs", type=int,
                     default=None),
        click.option("--boundary-tol", "boundary_tol", type=float, default=None),
        click.option("--msp-threshold", "msp_threshold", type=float, default=None),
        click.option("--output-dir", "output_dir", default=None),
        click.option("--dump-radii", "dump_radii", is_flag=True, default=None),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _collect_config(kwargs):
    config_path = kwargs.pop("config_path")
    seed = kwargs.pop("seed")
    seeds = kwargs.pop("seeds")
    if seeds is not None:
        kwargs["seeds"] = parse_seeds(seeds)
    elif seed is not None:
        kwargs["seeds"] = (seed,)
    return build_config(config_path, **kwargs)


@click.group()
def main():
    """Open intent detection experiments."""


@main.command()
@experiment_options
def run(**kwargs):
    """Train and evaluate over all seeds; print the aggregate metrics."""
    config = _collect_config(kwargs)
    result = run_experiment(config)
    click.echo(json.dumps(result.aggregate, indent=2, sort_keys=True))
    if result.errors:
        click.echo(f"failed seeds: {result.errors}", err=True)


@main.command("ablate-radius")
@experiment_options
@click.option("--factors", default="0.25,0.5,1.0,2.0,4.0",
              help="Comma-separated radius scale factors.")
def ablate_radius(factors, **kwargs):
    """Evaluate accuracy with globally scaled decision boundaries."""
    config = _collect_config(kwargs)
    rows = run_radius_ablation(config, parse_floats(factors))
    click.echo("factor,acc,learned")
    for row in rows:
        click.echo(f"{row['factor']},{row['acc']},{int(row['learned'])}")


@main.command("study-labeled-ratio")
@experiment_options
@click.option("--ratios", default="0.2,0.4,0.6,0.8,1.0")
@click.option("--methods", default=None,
              help="Comma-separated methods; defaults to --method.")
def study_labeled_ratio(ratios, methods, **kwargs):
    """Sweep the labeled-data ratio for one or more methods."""
    config = _collect_config(kwargs)
    method_list = [m.strip() for m in methods.split(",")] if methods else None
    rows = run_labeled_ratio_study(config, parse_floats(ratios), method_list)
    click.echo("ratio,method,acc")
    for row in rows:
        click.echo(f"{row['ratio']},{row['method']},{row['acc']}")


@main.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True))
@click.option("--input", "input_path", default=None,
              type=click.Path(exists=True),
              help="TSV/JSONL corpus; also accepts an .emb1 file directly.")
@click.option("--emb-file", "emb_path", default=None,
              type=click.Path(exists=True),
              help="EMB1 features for embedding-trained models.")
@click.option("--output", "output_path", default=None,
              help="Write TSV here instead of stdout.")
def predict(model_path, input_path, emb_path, output_path):
    """Classify inputs with a saved model, emitting text<TAB>label rows.

    Embedding-only input carries no text, so the first column falls back to
    the row index unless a corpus is also given for the text column.
    """
    if input_path is None and emb_path is None:
        raise click.UsageError("give --input and/or --emb-file")
    if emb_path is None and str(input_path).endswith(".emb1"):
        input_path, emb_path = None, input_path

    detector = load_model(model_path)
    texts = None
    if input_path is not None:
        rows = load_corpus(input_path, format=infer_corpus_format(input_path))
        texts = [u.text for u in rows]
    if emb_path is not None:
        if detector.encoder != "passthrough":
            raise click.ClickException(
                "model was trained on hashed text; EMB1 input needs an "
                "embedding-trained model"
            )
        x = load_embeddings(emb_path)
        if texts is not None and len(texts) != x.shape[0]:
            raise click.ClickException(
                f"corpus has {len(texts)} rows but {emb_path} has {x.shape[0]}"
            )
        labels = detector.predict(x)
        if texts is None:
            texts = [str(i) for i in range(x.shape[0])]
    else:
        if detector.encoder != "bow":
            raise click.ClickException(
                "model was trained on embeddings; pass the features via "
                "--emb-file"
            )
        labels = detector.predict(texts)
    lines = [f"{text}\t{label}" for text, label in zip(texts, labels)]
    payload = "\n".join(lines) + "\n"
    if output_path:
        Path(output_path).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


@main.command("export-table")
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("--json", "json_path", default=None,
              help="Also write the collected aggregates as JSON.")
def export_table(paths, json_path):
    """Render result tables from run directories containing manifest.json."""
    manifests = collect_manifests(paths)
    click.echo(format_results_table(manifests))
    if json_path:
        payload = [
            {"config": m["config"], "aggregate": m["aggregate"]}
            for m in manifests
        ]
        Path(json_path).write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )


if __name__ == "__main__":
    main()
