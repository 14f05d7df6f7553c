"""Command-line entry points for the workbench."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import corpus, metrics
from .errors import FliccError


@click.group()
def main():
    """Fallacy-detection workbench for climate misinformation."""


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="0.716,0.182,0.102", show_default=True,
              help="train,val,test fractions summing to 1")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def split(dataset_path, fractions, seed, out_path):
    """Stratified train/val/test split with per-label quotas."""
    try:
        parts = tuple(float(x) for x in fractions.split(","))
        ds = corpus.load_dataset(dataset_path)
        tagged = corpus.stratified_split(ds, parts, seed=seed)
        corpus.save_dataset(tagged, out_path)
        click.echo(corpus.split_summary(tagged).to_text())
    except (FliccError, ValueError) as exc:
        _fail(exc)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
def summary(dataset_path):
    """Per-label counts per partition with totals."""
    try:
        click.echo(corpus.split_summary(corpus.load_dataset(dataset_path)).to_text())
    except FliccError as exc:
        _fail(exc)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def crosstab(dataset_path, out_path):
    """Fallacy-by-claim contingency table (counts and row shares)."""
    try:
        tab = corpus.cross_tabulate(corpus.load_dataset(dataset_path))
        payload = json.dumps(tab.to_json_dict(), indent=2)
        if out_path:
            Path(out_path).write_text(payload, encoding="utf-8")
            click.echo(f"wrote {out_path} ({len(tab.claims)} claims, "
                       f"{tab.excluded_count} samples without claim codes)")
        else:
            click.echo(payload)
    except FliccError as exc:
        _fail(exc)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--encoder", default="bert-base-uncased", show_default=True)
@click.option("--pooling", default="mean", show_default=True, type=click.Choice(["mean", "cls"]))
@click.option("--topk", default=100, show_default=True, type=int)
@click.option("--contamination", default=0.02, show_default=True, type=float)
@click.option("--centroid-top", default=36, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def curate(dataset_path, encoder, pooling, topk, contamination, centroid_top, seed, out_path):
    """Emit the duplicate/outlier review report for human adjudication."""
    from . import curation

    try:
        ds = corpus.load_dataset(dataset_path)
        config = curation.EncoderConfig(model=encoder, pooling=pooling)
        embeddings = curation.embed([s.text for s in ds.samples], config,
                                    sample_ids=[s.id for s in ds.samples])
        exact = curation.exact_duplicates(ds)
        near = curation.near_duplicate_pairs(embeddings, top_k=topk)
        centroid = curation.centroid_distances(ds, embeddings)[:centroid_top]
        forest = curation.forest_outliers(embeddings, contamination=contamination, seed=seed)
        curation.review_report(out_path, exact=exact, near=near, centroid=centroid, forest=forest)
        click.echo(f"wrote {out_path}: {len(exact)} exact groups, {len(near)} near pairs, "
                   f"{len(centroid)} centroid + {len(forest)} forest outliers")
    except FliccError as exc:
        _fail(exc)


@main.command("apply-removals")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--list", "list_path", required=True, type=click.Path(exists=True),
              help="one sample id per line")
@click.option("--out", "out_path", required=True, type=click.Path())
def apply_removals(dataset_path, list_path, out_path):
    """Drop a human-approved removal list from a dataset."""
    try:
        ds = corpus.load_dataset(dataset_path)
        ids = [line.strip() for line in Path(list_path).read_text().splitlines() if line.strip()]
        trimmed = corpus.apply_removals(ds, ids)
        corpus.save_dataset(trimmed, out_path)
        click.echo(f"removed {len(ids)} samples; {len(trimmed)} remain")
    except FliccError as exc:
        _fail(exc)


@main.command("eval")
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="JSONL with id and label per line")
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(truth_path, pred_path, out_path):
    """Classification report for predictions against a labeled dataset."""
    try:
        truth_ds = corpus.load_dataset(truth_path)
        preds_by_id = {}
        with open(pred_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    preds_by_id[rec["id"]] = rec["label"]
        missing = [s.id for s in truth_ds.samples if s.id not in preds_by_id]
        if missing:
            raise FliccError(f"{len(missing)} samples lack predictions, e.g. {missing[:3]}")
        truths = [s.label for s in truth_ds.samples]
        preds = [preds_by_id[s.id] for s in truth_ds.samples]
        rep = metrics.report(truths, preds)
        click.echo(rep.to_text())
        if out_path:
            Path(out_path).write_text(json.dumps(rep.to_json_dict(), indent=2), encoding="utf-8")
    except FliccError as exc:
        _fail(exc)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="YAML run config mirroring TrainConfig")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), default=None,
              help="split-tagged dataset (train and val partitions are used)")
@click.option("--train", "train_path", type=click.Path(exists=True), default=None)
@click.option("--val", "val_path", type=click.Path(exists=True), default=None)
@click.option("--run-dir", "run_dir", required=True, type=click.Path())
def train(config_path, dataset_path, train_path, val_path, run_dir):
    """Fine-tune one configuration and save the run directory."""
    import yaml

    from . import training

    try:
        raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
        config = training.TrainConfig.from_json_dict(raw)
        train_set, val_set = _resolve_splits(dataset_path, train_path, val_path)
        result = training.fine_tune(config, train_set, val_set, run_dir=run_dir)
        click.echo(f"best epoch {result.best_epoch}: "
                   f"val F1-macro {result.best_val_f1_macro:.4f} -> {result.model_artifact}")
    except (FliccError, ValueError) as exc:
        _fail(exc)


def _resolve_splits(dataset_path, train_path, val_path):
    if dataset_path:
        ds = corpus.load_dataset(dataset_path)
        return ds.subset(corpus.Split.TRAIN), ds.subset(corpus.Split.VAL)
    if train_path and val_path:
        return corpus.load_dataset(train_path), corpus.load_dataset(val_path)
    raise click.UsageError("pass --dataset (tagged) or both --train and --val")


@main.command()
@click.option("--checkpoint", "checkpoint_id", required=True)
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="split-tagged dataset")
@click.option("--plan", default="paper", show_default=True, type=click.Choice(["paper"]),
              help="staged protocol to run")
@click.option("--stages", default=None,
              help="comma-separated subset of lr,gamma,wd,lora (default: all)")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--batch-size", default=32, show_default=True, type=int)
@click.option("--max-length", default=128, show_default=True, type=int)
@click.option("--run-root", "run_root", required=True, type=click.Path())
def sweep(checkpoint_id, dataset_path, plan, stages, seed, batch_size, max_length, run_root):
    """Run the staged hyperparameter protocol for one checkpoint."""
    from . import training

    try:
        stage_names = tuple(stages.split(",")) if stages else training.PROTOCOL_STAGES
        ds = corpus.load_dataset(dataset_path)
        base = training.TrainConfig(checkpoint_id=checkpoint_id, seed=seed,
                                    batch_size=batch_size, max_length=max_length)
        result = training.sweep(base, ds.subset(corpus.Split.TRAIN),
                                ds.subset(corpus.Split.VAL),
                                stages=stage_names, run_root=run_root)
        click.echo(training.render_sweep_grid({checkpoint_id: result.results}))
        click.echo(f"best: {result.best.config} -> {result.best.best_val_f1_macro:.4f}")
    except (FliccError, ValueError) as exc:
        _fail(exc)


@main.command("llm-eval")
@click.option("--provider", "provider_name", required=True)
@click.option("--model", "model_id", required=True)
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--archive", "archive_path", required=True, type=click.Path())
@click.option("--temperature", default=0.0, show_default=True, type=float)
@click.option("--disable-safety", is_flag=True, default=False)
@click.option("--max-inflight", default=4, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(), default=None)
def llm_eval(provider_name, model_id, test_path, archive_path, temperature,
             disable_safety, max_inflight, out_path):
    """Zero-shot LLM evaluation over an archived verdict file (resumable)."""
    from . import llm

    try:
        test_set = corpus.load_dataset(test_path)
        overrides = frozenset({"disable_safety"} if disable_safety else set())
        result = llm.evaluate_llm(
            test_set, provider_name, model_id, archive_path,
            temperature=temperature, safety_overrides=overrides,
            max_inflight=max_inflight,
        )
        click.echo(result.report.to_text())
        click.echo(f"\nunlabeled: {result.census.unlabeled} of {result.census.total}")
        top = sorted(result.census.prediction_counts.items(), key=lambda kv: -kv[1])[:3]
        click.echo("most common predictions: " + ", ".join(f"{k} ({v})" for k, v in top))
        if out_path:
            Path(out_path).write_text(json.dumps(result.report.to_json_dict(), indent=2),
                                      encoding="utf-8")
    except FliccError as exc:
        _fail(exc)


@main.command()
@click.option("--artifact", "artifact_path", required=True, type=click.Path(exists=True))
@click.option("--text", default=None)
@click.option("--file", "file_path", type=click.Path(exists=True), default=None,
              help="one text per line")
@click.option("--out", "out_path", type=click.Path(), default=None)
def predict(artifact_path, text, file_path, out_path):
    """Classify a text (or a file of texts) with a trained artifact."""
    from .inference import load_predictor

    try:
        predictor = load_predictor(artifact_path)
        if text is not None:
            click.echo(json.dumps(predictor.predict(text).to_json_dict(), indent=2))
            return
        if file_path is None:
            raise click.UsageError("pass --text or --file")
        texts = [l for l in Path(file_path).read_text(encoding="utf-8").splitlines() if l.strip()]
        predictions = predictor.predict_batch(texts)
        lines = [json.dumps(p.to_json_dict(), ensure_ascii=False) for p in predictions]
        if out_path:
            Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
            click.echo(f"wrote {len(lines)} predictions to {out_path}")
        else:
            for line in lines:
                click.echo(line)
    except FliccError as exc:
        _fail(exc)


@main.command()
@click.option("--artifact", "artifact_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=lambda: os.environ.get("FLICC_HOST", "127.0.0.1"))
@click.option("--port", default=lambda: int(os.environ.get("FLICC_PORT", "8000")), type=int)
@click.option("--cors-origin", "cors_origins", multiple=True, default=("*",), show_default=True)
def serve(artifact_path, host, port, cors_origins):
    """Serve GET /health, GET /labels, and POST /predict."""
    from .inference import load_predictor, serve as run_service

    try:
        predictor = load_predictor(artifact_path)
        click.echo(f"serving {predictor.model_version} on {host}:{port}")
        run_service(predictor, host=host, port=port, cors_origins=cors_origins)
    except FliccError as exc:
        _fail(exc)


@main.command("seed-checkpoint")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None,
              help="dataset whose texts seed the vocabulary")
@click.option("--seed", default=0, show_default=True, type=int)
def seed_checkpoint_cmd(out_dir, corpus_path, seed):
    """Build a small self-contained checkpoint for offline runs."""
    from .checkpoints import default_seed_texts, seed_checkpoint

    extra = []
    if corpus_path:
        extra = [s.text for s in corpus.load_dataset(corpus_path).samples]
    path = seed_checkpoint(out_dir, default_seed_texts(extra), seed=seed)
    click.echo(f"wrote checkpoint to {path}")


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--per-label", default=None, type=int,
              help="override the reference distribution with a flat count")
def synth(out_path, seed, per_label):
    """Generate a synthetic corpus with the reference label distribution."""
    from .synthetic import synthetic_corpus
    from .taxonomy import canonical_names

    counts = {name: per_label for name in canonical_names()} if per_label else None
    ds = synthetic_corpus(label_counts=counts, seed=seed)
    corpus.save_dataset(ds, out_path)
    click.echo(f"wrote {len(ds)} samples to {out_path}")


if __name__ == "__main__":
    main()
