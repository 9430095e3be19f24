"""Command-line entry points.

Every command resolves its parameters (config file defaults, flags win),
hashes them, and stamps that hash into its outputs so any artifact can be
regenerated from its manifest plus config hash.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import artifact as artifact_mod
from . import cartography as carto
from . import ensemble as ens
from . import metrics as metrics_mod
from . import perturb as perturb_mod
from . import predictor as pred_mod
from . import signals as signals_mod
from .align import ibm1_align, ingest_alignments
from .bpe import bpe_learn, load_merges, save_merges
from .corpus import (
    corpus_hash,
    filter_corpus,
    load_parallel,
    tokenize_corpus,
    write_rejection_report,
)
from .features import FEATURE_NAMES, build_feature_tables, extract_features_corpus


def _config_hash(params: dict) -> str:
    blob = json.dumps({k: str(v) for k, v in sorted(params.items())}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _stamp(ctx: click.Context) -> str:
    return _config_hash(ctx.params)


def _load_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith((".yaml", ".yml")):
        import yaml

        return yaml.safe_load(text) or {}
    return json.loads(text)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON/YAML file with per-command defaults; flags win.")
@click.pass_context
def main(ctx, config_path):
    """Memorisation-generalisation cartography toolkit."""
    if config_path:
        ctx.default_map = _load_config(config_path)


def _tokenized(source, target, merges=None, split_punct=False):
    pairs = load_parallel(source, target)
    model = load_merges(merges) if merges else None
    return pairs, tokenize_corpus(pairs, bpe_model=model, split_punct=split_punct)


@main.command("filter")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--split-punct", is_flag=True, default=False)
@click.option("--out-ids", required=True, type=click.Path())
@click.option("--report", required=True, type=click.Path())
@click.pass_context
def filter_cmd(ctx, source, target, split_punct, out_ids, report):
    """Apply the corpus quality criteria; write kept ids and a rejection report."""
    _, tok = _tokenized(source, target, split_punct=split_punct)
    result = filter_corpus(tok)
    stamp = _stamp(ctx)
    with open(out_ids, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={stamp}\n")
        for i in result.kept_ids:
            f.write(f"{i}\n")
    write_rejection_report(report, result)
    if not result.kept_ids:
        click.echo("warning: all pairs rejected", err=True)
    click.echo(f"kept {len(result.kept_ids)}/{len(tok)} pairs; report in {report}")


@main.command("bpe-learn")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--vocab-size", default=4000, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bpe_learn_cmd(source, target, vocab_size, out_path):
    """Learn a joint BPE vocabulary over both corpus sides."""
    pairs = load_parallel(source, target)
    stream = ([*p.source.split(), *p.target.split()] for p in pairs)
    model = bpe_learn(stream, vocab_size)
    save_merges(model, out_path)
    click.echo(f"learned {len(model.merges)} merges -> {out_path}")


@main.command("bpe-apply")
@click.option("--merges", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
def bpe_apply_cmd(merges, input_path, output):
    """Segment a text file with a learned merges file."""
    model = load_merges(merges)
    with open(input_path, encoding="utf-8") as fin, open(output, "w", encoding="utf-8") as fout:
        for line in fin:
            fout.write(" ".join(model.apply(line.split())) + "\n")
    click.echo(f"wrote {output}")


@main.command("splits")
@click.option("--n", "n_examples", required=True, type=int)
@click.option("--seeds", "n_seeds", default=40, show_default=True)
@click.option("--master-seed", default=0, show_default=True)
@click.option("--train-fraction", default=0.5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def splits_cmd(n_examples, n_seeds, master_seed, train_fraction, out_path):
    """Generate the hold-out ensemble membership manifest."""
    plan = ens.SplitPlan(n_examples, n_seeds, master_seed, train_fraction)
    matrix = ens.make_splits(plan)
    digest = ens.write_membership_manifest(out_path, matrix, plan)
    click.echo(f"{n_seeds} x {n_examples} membership -> {out_path} (sha256 {digest[:12]})")


@main.command("score")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--merges", type=click.Path(exists=True), default=None)
@click.option("--splits", "splits_path", required=True, type=click.Path(exists=True))
@click.option("--scorer", default="toy", show_default=True,
              help="'toy' or an external command honoring the scorer contract.")
@click.option("--alpha", default=0.9, show_default=True)
@click.option("--noise-sigma", default=0.0, show_default=True)
@click.option("--max-workers", default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def score_cmd(ctx, source, target, merges, splits_path, scorer, alpha, noise_sigma, max_workers, out_path):
    """Run the scorer for every ensemble seed; write combined score logs."""
    _, tok = _tokenized(source, target, merges=merges)
    matrix, _ = ens.read_membership_manifest(splits_path)
    if scorer == "toy":
        scorer_obj = ens.ToyScorer(tok, alpha=alpha, noise_sigma=noise_sigma)
    else:
        scorer_obj = scorer
    logs = ens.run_scorer(matrix, tok, scorer_obj, max_workers=max_workers)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=seed\texample_id\tsplit\tmean_token_logprob\ttarget_len\thyp_mean_token_logprob\n")
        for log in logs:
            hyp = "" if log.hyp_mean_token_logprob is None else f"{log.hyp_mean_token_logprob:.9g}"
            f.write(
                f"{log.seed}\t{log.example_id}\t{log.split}\t{log.mean_token_logprob:.9g}"
                f"\t{log.target_len}\t{hyp}\n"
            )
    click.echo(f"{len(logs)} score rows -> {out_path}")


def _read_combined_logs(path) -> list[ens.ScoreLog]:
    logs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (5, 6):
                raise ens.EnsembleError(f"{path}:{lineno}: expected 5 or 6 fields")
            logs.append(
                ens.ScoreLog(
                    seed=int(parts[0]),
                    example_id=int(parts[1]),
                    split=parts[2],
                    mean_token_logprob=float(parts[3]),
                    target_len=int(parts[4]),
                    hyp_mean_token_logprob=float(parts[5]) if len(parts) == 6 and parts[5] else None,
                )
            )
    return logs


@main.command("metrics")
@click.option("--logs", "logs_path", required=True, type=click.Path(exists=True))
@click.option("--variant", default="ll", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def metrics_cmd(ctx, logs_path, variant, out_path):
    """Aggregate score logs into per-example TM/GS/CM records."""
    logs = _read_combined_logs(logs_path)
    records, invalid = metrics_mod.records_from_score_logs(logs, variant=variant)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=example_id\ttm\tgs\tcm\tn_train\tn_heldout\n")
        for eid in sorted(records):
            r = records[eid]
            f.write(
                f"{eid}\t{r.tm:.9g}\t{r.gs:.9g}\t{r.cm:.9g}\t{r.n_train_models}\t{r.n_heldout_models}\n"
            )
    click.echo(f"{len(records)} records ({len(invalid)} invalid) -> {out_path}")


@main.command("features")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--merges", type=click.Path(exists=True), default=None)
@click.option("--alignments", type=click.Path(exists=True), default=None,
              help="Pharaoh alignment file; omit to run the built-in IBM-1 fallback.")
@click.option("--ibm1-iterations", default=5, show_default=True)
@click.option("--backtranslations", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def features_cmd(ctx, source, target, merges, alignments, ibm1_iterations, backtranslations, out_path):
    """Extract the 28 surface features per pair into a TSV."""
    _, tok = _tokenized(source, target, merges=merges)
    if alignments:
        align_map = ingest_alignments(alignments, tok)
    else:
        align_map = ibm1_align(tok, iterations=ibm1_iterations)
    bt = None
    if backtranslations:
        bt_lines = Path(backtranslations).read_text(encoding="utf-8").splitlines()
        bt = [line.split() for line in bt_lines]
    vectors = extract_features_corpus(tok, alignments=align_map, backtranslations=bt)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=pair_id\t" + "\t".join(FEATURE_NAMES) + "\n")
        for fv in vectors:
            cells = ["" if np.isnan(v) else f"{v:.9g}" for v in fv.values]
            f.write(f"{fv.pair_id}\t" + "\t".join(cells) + "\n")
    click.echo(f"{len(vectors)} feature rows -> {out_path}")


@main.command("signals")
@click.option("--epoch-log", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def signals_cmd(ctx, epoch_log, out_path):
    """Extract the six training signals from a diagnostic run's epoch log."""
    sigs = signals_mod.extract_signals_from_log(epoch_log)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=example_id\t" + "\t".join(signals_mod.SIGNAL_NAMES) + "\thyp_from_target\n")
        for eid in sorted(sigs):
            s = sigs[eid]
            vals = "\t".join(f"{v:.9g}" for v in s.as_array())
            f.write(f"{eid}\t{vals}\t{int(s.hyp_from_target)}\n")
    click.echo(f"{len(sigs)} signal rows -> {out_path}")


@main.command("assemble")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--merges", type=click.Path(exists=True), default=None)
@click.option("--logs", "logs_path", required=True, type=click.Path(exists=True))
@click.option("--alignments", type=click.Path(exists=True), default=None)
@click.option("--ibm1-iterations", default=5, show_default=True)
@click.option("--backtranslations", type=click.Path(exists=True), default=None)
@click.option("--epoch-log", type=click.Path(exists=True), default=None)
@click.option("--variant", default="ll", show_default=True)
@click.option("--no-features", is_flag=True, default=False)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def assemble_cmd(ctx, source, target, merges, logs_path, alignments, ibm1_iterations,
                 backtranslations, epoch_log, variant, no_features, out_path):
    """Build the full map artifact from corpus, score logs, and side inputs."""
    pairs, tok = _tokenized(source, target, merges=merges)
    logs = _read_combined_logs(logs_path)
    records, invalid = metrics_mod.records_from_score_logs(logs, variant=variant)
    k = len({log.seed for log in logs})

    vectors = None
    if not no_features:
        if alignments:
            align_map = ingest_alignments(alignments, tok)
        else:
            align_map = ibm1_align(tok, iterations=ibm1_iterations)
        bt = None
        if backtranslations:
            bt_lines = Path(backtranslations).read_text(encoding="utf-8").splitlines()
            bt = [line.split() for line in bt_lines]
        vectors = extract_features_corpus(tok, alignments=align_map, backtranslations=bt)

    sigs = signals_mod.extract_signals_from_log(epoch_log) if epoch_log else None

    map_ = carto.assemble_map(
        records,
        invalid,
        n_examples=len(pairs),
        variant=variant,
        k=k,
        corpus_hash=corpus_hash(pairs),
        features=vectors,
        signals=sigs,
    )
    map_.config_hash = _stamp(ctx)
    checksum = artifact_mod.write_map_artifact(map_, out_path)
    click.echo(f"map of {len(map_)} examples -> {out_path} (sha256 {checksum[:12]})")


def _predictor_rows(map_, input_mode):
    if map_.features is None:
        raise click.ClickException("map artifact has no features")
    blocks = [map_.features]
    if input_mode == "features+signals":
        if map_.signals is None:
            raise click.ClickException("map artifact has no signals")
        blocks.append(map_.signals)
    x = np.column_stack(blocks)
    y = np.column_stack([map_.tm, map_.gs, map_.cm])
    return x, y


@main.command("train-predictor")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--inputs", "input_mode", default="features", show_default=True,
              type=click.Choice(["features", "features+signals"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=20, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--no-standardize", is_flag=True, default=False,
              help="Reproduce the library-default regime without input scaling.")
@click.option("--out", "out_path", required=True, type=click.Path())
def train_predictor_cmd(map_path, input_mode, seed, epochs, learning_rate, no_standardize, out_path):
    """Fit the (tm, gs, cm) MLP on a map artifact."""
    map_ = artifact_mod.read_map_artifact(map_path)
    x, y = _predictor_rows(map_, input_mode)
    x_kept, y_kept, report = pred_mod.prepare_training_rows(x, y)
    model = pred_mod.train_mlp(
        x_kept, y_kept,
        seed=seed, epochs=epochs, learning_rate=learning_rate,
        standardize=not no_standardize, corpus_hash=map_.corpus_hash,
        null_columns=report["null_columns"],
    )
    pred_mod.save_model(model, out_path)
    click.echo(
        f"trained on {len(x_kept)} rows (dropped {report['dropped']} with nulls, "
        f"{len(report['null_columns'])} all-null columns zeroed); "
        f"final loss {model.epoch_losses[-1]:.6f} -> {out_path}"
    )


@main.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def predict_cmd(ctx, model_path, map_path, out_path):
    """Predict metrics for every complete-feature row of a map artifact."""
    model = pred_mod.load_model(model_path)
    map_ = artifact_mod.read_map_artifact(map_path)
    input_mode = "features+signals" if model.input_mode == "features+signals" else "features"
    x, _ = _predictor_rows(map_, input_mode)
    x = np.array(x, copy=True)
    x[:, model.null_columns] = 0.0
    ok = np.isfinite(x).all(axis=1)
    preds = np.full((len(map_), 3), np.nan)
    adjusted = np.zeros(len(map_), dtype=bool)
    if ok.any():
        preds[ok], adjusted[ok] = pred_mod.predict(model, x[ok])
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=example_id\ttm\tgs\tcm\tadjusted\n")
        for row in range(len(map_)):
            cells = ["" if np.isnan(v) else f"{v:.9g}" for v in preds[row]]
            f.write(f"{int(map_.ids[row])}\t" + "\t".join(cells) + f"\t{int(adjusted[row])}\n")
    click.echo(f"predictions for {int(ok.sum())}/{len(map_)} rows -> {out_path}")


@main.group("regions")
def regions_group():
    """Grid-region removal experiments."""


@regions_group.command("plan")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--step", default=0.1, show_default=True)
@click.option("--token-budget", default=750_000, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
def regions_plan_cmd(ctx, map_path, step, token_budget, out_dir):
    """Write one removal manifest per grid coordinate."""
    map_ = artifact_mod.read_map_artifact(map_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _stamp(ctx)
    for coord in carto.grid_coordinates(step):
        removal = carto.nearest_removal_set(map_, coord, token_budget=token_budget)
        carto.write_manifest(
            out / f"removal.{coord.i:g}.{coord.j:g}.txt",
            {
                "kind": "removal",
                "coordinate": f"{coord.i:g},{coord.j:g}",
                "token_budget": token_budget,
                "total_source_tokens": removal.total_source_tokens,
                "map_corpus_hash": map_.corpus_hash,
                "config_hash": stamp,
            },
            removal.example_ids,
        )
    click.echo(f"removal manifests -> {out_dir}")


@regions_group.command("rank")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--manifest-dir", required=True, type=click.Path(exists=True))
@click.option("--performance", "perf_path", required=True, type=click.Path(exists=True))
@click.option("--min-region", default=2000, show_default=True)
@click.option("--step", default=0.1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def regions_rank_cmd(ctx, map_path, manifest_dir, perf_path, min_region, step, out_path):
    """Rank region relevance from removal manifests and performance records."""
    map_ = artifact_mod.read_map_artifact(map_path)
    removal_sets = []
    for manifest in sorted(Path(manifest_dir).glob("removal.*.txt")):
        meta, ids = carto.read_manifest(manifest)
        i, j = (float(v) for v in meta["coordinate"].split(","))
        removal_sets.append(
            carto.RemovalSet(
                coordinate=carto.GridCoordinate(i, j),
                example_ids=ids,
                total_source_tokens=int(meta["total_source_tokens"]),
                budget=int(meta["token_budget"]),
            )
        )
    performance = carto.read_performance_records(perf_path)
    result = carto.region_relevance(
        map_, removal_sets, performance, min_region=min_region, grid=carto.grid_coordinates(step)
    )
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write(f"#never_removed={result.never_removed_count}\n")
        f.write("#columns=i\tj\tcount\tbleu_dev\tmean_logprob\thallucination_ratio\n")
        for coord in result.grid:
            scores = result.region_scores.get(coord, {})
            cells = [
                f"{scores[m]:.9g}" if m in scores else ""
                for m in carto.PERFORMANCE_METRICS
            ]
            f.write(f"{coord.i:g}\t{coord.j:g}\t{result.region_counts[coord]}\t" + "\t".join(cells) + "\n")
        for metric in carto.PERFORMANCE_METRICS:
            tops = " ".join(f"({c.i:g},{c.j:g})" for c in result.most_relevant[metric])
            bots = " ".join(f"({c.i:g},{c.j:g})" for c in result.least_relevant[metric])
            f.write(f"#most_relevant_{metric}={tops}\n")
            f.write(f"#least_relevant_{metric}={bots}\n")
    click.echo(f"region ranking -> {out_path}")


@main.command("sample")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--bounds", required=True, help="min_tm,max_tm,min_gs,max_gs")
@click.option("--token-budget", required=True, type=int,
              help="Whitespace source-token count of the reference random sample.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def sample_cmd(ctx, map_path, bounds, token_budget, seed, out_path):
    """Sample a specialised training subset from a predicted or measured map."""
    map_ = artifact_mod.read_map_artifact(map_path)
    parts = [float(v) for v in bounds.split(",")]
    if len(parts) != 4:
        raise click.ClickException("--bounds needs 4 comma-separated values")
    result = carto.specialised_sample(map_, tuple(parts), token_budget, seed)
    carto.write_manifest(
        out_path,
        {
            "kind": "selection",
            "bounds": bounds,
            "token_budget": token_budget,
            "seed": seed,
            "total_source_tokens": result.total_source_tokens,
            "met_budget": int(result.met_budget),
            "map_corpus_hash": map_.corpus_hash,
            "config_hash": _stamp(ctx),
        },
        result.example_ids,
    )
    click.echo(
        f"{len(result.example_ids)} examples, {result.total_source_tokens} tokens -> {out_path}"
        + ("" if result.met_budget else " (budget not met)")
    )


@main.group("perturb")
def perturb_group():
    """Hallucination perturbation harness."""


@perturb_group.command("gen")
@click.option("--source", required=True, type=click.Path(exists=True),
              help="Sentences to perturb, one per line.")
@click.option("--freq-source", required=True, type=click.Path(exists=True))
@click.option("--freq-target", required=True, type=click.Path(exists=True))
@click.option("--merges", type=click.Path(exists=True), default=None)
@click.option("--positions", default=4, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def perturb_gen_cmd(source, freq_source, freq_target, merges, positions, out_path):
    """Build the insertion vocabulary and write the perturbation manifest."""
    from .corpus import build_frequency_table

    _, tok = _tokenized(freq_source, freq_target, merges=merges)
    table = build_frequency_table(tok, "source", "bpe")
    vocab = perturb_mod.build_insertion_vocab(table)
    lines = Path(source).read_text(encoding="utf-8").splitlines()
    sources = {i: line.split() for i, line in enumerate(lines) if line.strip()}
    sets = perturb_mod.perturb_sources(sources, vocab, positions=positions)
    digest = perturb_mod.write_perturbation_manifest(out_path, sets)
    total = sum(len(s.insertions) for s in sets)
    click.echo(f"{total} perturbations ({len(vocab)} tokens) -> {out_path} (sha256 {digest[:12]})")


@perturb_group.command("judge")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--translations", required=True, type=click.Path(exists=True),
              help="Translations line-aligned to the manifest rows.")
@click.option("--references", required=True, type=click.Path(exists=True),
              help="Reference translations, one per base source line.")
@click.option("--baseline-translations", type=click.Path(exists=True), default=None,
              help="Unperturbed translations, one per base source line.")
@click.option("--gate/--no-gate", default=True, show_default=True)
@click.option("--gate-bleu", default=1.0, show_default=True)
@click.option("--against-hypothesis", is_flag=True, default=False,
              help="Judge BLEU against the unperturbed translation instead of the reference.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def perturb_judge_cmd(ctx, manifest, translations, references, baseline_translations,
                      gate, gate_bleu, against_hypothesis, out_path):
    """Judge ingested translations of perturbed sources."""
    rows = perturb_mod.read_perturbation_manifest(manifest)
    trans = [line.split() for line in Path(translations).read_text(encoding="utf-8").splitlines()]
    refs = {
        i: line.split()
        for i, line in enumerate(Path(references).read_text(encoding="utf-8").splitlines())
    }
    baselines = None
    if baseline_translations:
        baselines = {
            i: line.split()
            for i, line in enumerate(
                Path(baseline_translations).read_text(encoding="utf-8").splitlines()
            )
        }
    report = perturb_mod.judge_hallucinations(
        rows, trans, refs, baseline_translations=baselines, gate=gate, gate_bleu=gate_bleu,
        against_hypothesis=against_hypothesis,
    )
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write(f"#ratio={report.ratio:.9g}\n")
        f.write(f"#evaluated={len(report.evaluated_ids)}\texcluded={len(report.excluded_ids)}\n")
        f.write("#columns=base_id\tflagged\tn_triggers\tfirst_trigger\n")
        for base_id in report.evaluated_ids:
            trig = report.triggers[base_id]
            first = f"{trig[0][0]}@{trig[0][1]}" if trig else ""
            f.write(f"{base_id}\t{int(report.flagged[base_id])}\t{len(trig)}\t{first}\n")
    click.echo(f"hallucination ratio {report.ratio:.4f} -> {out_path}")


@main.group("analyze")
def analyze_group():
    """Map statistics."""


@analyze_group.command("corr")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def analyze_corr_cmd(ctx, map_path, out_path):
    """Spearman correlation tables (feature x metric and feature x feature)."""
    map_ = artifact_mod.read_map_artifact(map_path)
    fm, ff = carto.correlation_table(map_)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=feature\trho_tm\trho_gs\trho_cm\t" + "\t".join(FEATURE_NAMES) + "\n")
        for row, name in enumerate(FEATURE_NAMES):
            cells = ["" if np.isnan(v) else f"{v:.9g}" for v in fm[row]]
            cells += ["" if np.isnan(v) else f"{v:.9g}" for v in ff[row]]
            f.write(f"{name}\t" + "\t".join(cells) + "\n")
    click.echo(f"correlation tables -> {out_path}")


@analyze_group.command("compare")
@click.option("--map-a", required=True, type=click.Path(exists=True))
@click.option("--map-b", required=True, type=click.Path(exists=True))
@click.option("--metric", default="cm", show_default=True,
              type=click.Choice(["tm", "gs", "cm"]))
def analyze_compare_cmd(map_a, map_b, metric):
    """Pearson r between the same metric on two maps (shared ids)."""
    a = artifact_mod.read_map_artifact(map_a)
    b = artifact_mod.read_map_artifact(map_b)
    r = carto.compare_maps(a, b, metric=metric)
    click.echo(f"pearson_r\t{metric}\t{r:.6f}")


@analyze_group.command("trigrams")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--source", required=True, type=click.Path(exists=True),
              help="Line-aligned corpus side to pool trigrams from; pass the "
                   "target file for the target-side variant.")
@click.option("--step", default=0.1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def analyze_trigrams_cmd(ctx, map_path, source, step, out_path):
    """Unique-trigram ratio per grid coordinate."""
    map_ = artifact_mod.read_map_artifact(map_path)
    src_tokens = [line.split() for line in Path(source).read_text(encoding="utf-8").splitlines()]
    ratios = carto.trigram_uniqueness(map_, src_tokens, grid=carto.grid_coordinates(step))
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=i\tj\tunique_trigram_ratio\n")
        for coord, ratio in ratios.items():
            cell = "" if ratio is None else f"{ratio:.9g}"
            f.write(f"{coord.i:g}\t{coord.j:g}\t{cell}\n")
    click.echo(f"trigram ratios -> {out_path}")


@analyze_group.command("buckets")
@click.option("--baseline", required=True, type=click.Path(exists=True),
              help="Token probabilities, one per line.")
@click.option("--condition", required=True, type=click.Path(exists=True))
@click.option("--buckets", "n_buckets", default=10, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def analyze_buckets_cmd(ctx, baseline, condition, n_buckets, out_path):
    """Per-probability-bucket deltas between two token-level runs."""
    base = [float(v) for v in Path(baseline).read_text(encoding="utf-8").split()]
    cond = [float(v) for v in Path(condition).read_text(encoding="utf-8").split()]
    deltas = carto.probability_buckets(base, cond, n_buckets=n_buckets)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=bucket_low\tbucket_high\tmean_delta\n")
        for b, delta in enumerate(deltas):
            cell = "" if delta is None else f"{delta:.9g}"
            f.write(f"{b / n_buckets:.9g}\t{(b + 1) / n_buckets:.9g}\t{cell}\n")
    click.echo(f"bucket deltas -> {out_path}")


@analyze_group.command("centroids")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--labels", required=True, type=click.Path(exists=True),
              help="TSV of example_id<TAB>comma-separated labels.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def analyze_centroids_cmd(ctx, map_path, labels, out_path):
    """Per-label centroids and marginal histograms from manual annotations."""
    map_ = artifact_mod.read_map_artifact(map_path)
    label_map: dict[int, list[str]] = {}
    for lineno, line in enumerate(Path(labels).read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        ident, _, label_str = line.partition("\t")
        label_map[int(ident)] = [s for s in label_str.split(",") if s]
    centroids = carto.group_centroids(map_, label_map)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(f"#config_hash={_stamp(ctx)}\n")
        f.write("#columns=label\tcount\tcentroid_tm\tcentroid_gs\ttm_hist\tgs_hist\n")
        for label, info in centroids.items():
            f.write(
                f"{label}\t{info['count']}\t{info['centroid'][0]:.9g}\t{info['centroid'][1]:.9g}"
                f"\t{','.join(map(str, info['tm_hist']))}\t{','.join(map(str, info['gs_hist']))}\n"
            )
    click.echo(f"{len(centroids)} label centroids -> {out_path}")


@analyze_group.command("trace")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--ids", "ids_path", required=True, type=click.Path(exists=True),
              help="Example ids, one per line (e.g. hallucination base ids).")
def analyze_trace_cmd(map_path, ids_path):
    """CM distribution of an example id set."""
    map_ = artifact_mod.read_map_artifact(map_path)
    ids = [int(line) for line in Path(ids_path).read_text(encoding="utf-8").split()]
    summary = carto.trace_cm_of_examples(map_, ids)
    click.echo(json.dumps(summary))


@main.command("serve")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--source", type=click.Path(exists=True), default=None)
@click.option("--target", type=click.Path(exists=True), default=None)
@click.option("--manifest-dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve_cmd(map_path, source, target, manifest_dir, host, port):
    """Serve the map over HTTP for the explorer UI."""
    import uvicorn

    from .server import create_app

    map_ = artifact_mod.read_map_artifact(map_path)
    pairs = None
    if source and target:
        pairs = load_parallel(source, target)
    app = create_app(map_, pairs=pairs, manifest_dir=manifest_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
