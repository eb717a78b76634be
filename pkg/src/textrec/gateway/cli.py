"""Command-line entry points tying the pipeline together.

Every subcommand reads a config file (JSON) when given, applies flag
overrides on top, and writes a run manifest next to its outputs so any
result can be traced back to its exact inputs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .. import __version__
from ..dataio import (
    SplitPlan,
    align_to_catalog,
    binarize,
    build_matrices,
    filter_interactions,
    load_catalog,
    load_interactions,
    load_ratings,
    make_splits,
    save_catalog,
    save_interactions,
)
from ..summaries import (
    CannedCompletionClient,
    HTTPCompletionClient,
    OfflineSynthesizerClient,
    ProviderConfig,
    UserSummary,
    build_generation_prompt,
    generate_summary,
    load_corpus,
    save_corpus,
)
from ..training import (
    BackboneTrainConfig,
    TrainConfig,
    prepare_training_data,
    train,
    train_backbone,
    write_history,
    write_manifest,
)


def _load_config(config_path: str | None) -> dict:
    if not config_path:
        return {}
    return json.loads(Path(config_path).read_text())


def _option(overrides: dict, config: dict, key: str, default):
    if overrides.get(key) is not None:
        return overrides[key]
    return config.get(key, default)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Recommendations steered by an editable text profile."""


@main.command()
@click.option("--ratings", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@click.option("--min-user", type=int, default=None)
@click.option("--min-item", type=int, default=None)
@click.option("--threshold", type=int, default=None, help="Positive-rating cutoff.")
@click.option("--n-val", type=int, default=None)
@click.option("--n-test", type=int, default=None)
@click.option("--max-input", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--delimiter", default=None)
def ingest(ratings, catalog_path, out, config, **flags) -> None:
    """Filter ratings, build implicit targets, and write the split plan."""
    cfg = _load_config(config)
    min_user = _option(flags, cfg, "min_user", 20)
    min_item = _option(flags, cfg, "min_item", 5)
    threshold = _option(flags, cfg, "threshold", 4)
    n_val = _option(flags, cfg, "n_val", 250)
    n_test = _option(flags, cfg, "n_test", 250)
    max_input = _option(flags, cfg, "max_input", 50)
    seed = _option(flags, cfg, "seed", 0)
    delimiter = _option(flags, cfg, "delimiter", "::")

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inter = load_ratings(ratings, delimiter=delimiter)
    inter = filter_interactions(inter, min_user, min_item)
    catalog = load_catalog(catalog_path, delimiter=delimiter)
    inter, catalog = align_to_catalog(inter, catalog)
    inter = binarize(inter, threshold)
    plan = make_splits(inter, n_val, n_test, max_input=max_input, seed=seed)

    save_interactions(inter, out_dir / "interactions.npz")
    save_catalog(catalog, out_dir / "catalog.dat")
    plan.save(out_dir / "split_plan.json")
    write_manifest(out_dir / "manifest.json", command="ingest", seed=seed,
                   min_user=min_user, min_item=min_item, threshold=threshold,
                   n_val=n_val, n_test=n_test, max_input=max_input,
                   ratings_hash=inter.content_hash(), catalog_hash=catalog.content_hash(),
                   users=len(plan.role), items=catalog.n_items)
    click.echo(f"ingested {len(plan.role)} users x {catalog.n_items} items -> {out_dir}")


def _load_data_dir(data_dir: str):
    base = Path(data_dir)
    inter = load_interactions(base / "interactions.npz")
    catalog = load_catalog(base / "catalog.dat")
    plan = SplitPlan.load(base / "split_plan.json")
    return inter, catalog, plan


def _history_for(inter, catalog, plan, user: int) -> list[tuple[str, int, list[str]]]:
    rows = inter.by_user()[user]
    inputs = set(plan.input_items[user])
    history = []
    for idx in rows:
        item_id = int(inter.item[idx])
        if item_id not in inputs:
            continue
        item = catalog.items[item_id]
        genres = [catalog.genre_vocabulary[g] for g in sorted(item.genres)]
        history.append((item.title, int(inter.rating[idx]), genres))
    return history


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@click.option("--provider", type=click.Choice(["offline", "canned", "http"]), default=None)
@click.option("--canned-path", type=click.Path(), help="Replay log for the canned provider.")
@click.option("--item-type", type=click.Choice(["movie", "book"]), default=None)
@click.option("--budget", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--users", "user_filter", default=None,
              help="Comma-separated user ids; all users otherwise.")
def summarize(data_dir, out, config, provider, canned_path, item_type, budget, seed,
              user_filter) -> None:
    """Generate a summary corpus for every user from their input items."""
    cfg = _load_config(config)
    provider = provider if provider is not None else cfg.get("provider", "offline")
    item_type = item_type if item_type is not None else cfg.get("item_type", "movie")
    budget = budget if budget is not None else cfg.get("budget", 50)
    seed = seed if seed is not None else cfg.get("seed", 0)
    inter, catalog, plan = _load_data_dir(data_dir)
    if provider == "offline":
        client = OfflineSynthesizerClient()
    elif provider == "canned":
        if not canned_path:
            raise click.UsageError("--canned-path is required with the canned provider")
        client = CannedCompletionClient(canned_path)
    else:
        client = HTTPCompletionClient(ProviderConfig.from_env())
    users = sorted(plan.role)
    if user_filter:
        wanted = {int(u) for u in user_filter.split(",")}
        users = [u for u in users if u in wanted]
    corpus = []
    for user in users:
        history = _history_for(inter, catalog, plan, user)
        prompt = build_generation_prompt(history, item_type=item_type, budget=budget)
        corpus.append(generate_summary(prompt, client, user, seed=seed * 1_000_003 + user))
    save_corpus(corpus, out)
    write_manifest(Path(out).with_suffix(".manifest.json"), command="summarize",
                   provider=provider, item_type=item_type, budget=budget, seed=seed,
                   users=len(corpus))
    click.echo(f"wrote {len(corpus)} summaries -> {out}")


def _corpus_map(path: str) -> dict[int, UserSummary]:
    return {s.user: s for s in load_corpus(path)}


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@click.option("--backbone", type=click.Choice(["multi-vae", "macrid-vae"]), default=None)
@click.option("--latent", type=int, default=None)
@click.option("--hidden", type=int, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--backbone-epochs", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--lambda1", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--genre-profiles", is_flag=True, default=False,
              help="Train the genre-vector variant instead of the text variant.")
def train_cmd(data_dir, summaries_path, out, config, genre_profiles, **flags) -> None:
    """Pretrain the backbone, then align the profile encoder to it."""
    from ..models import (
        AlignedRecommender,
        BackboneSpec,
        GenreProfileEncoder,
        HashedTextEncoder,
        MacridOptions,
        build_backbone,
        save_checkpoint,
    )
    from ..models.genre import genre_profile

    cfg = _load_config(config)
    backbone_kind = _option(flags, cfg, "backbone", "multi-vae")
    latent = _option(flags, cfg, "latent", 32)
    hidden = _option(flags, cfg, "hidden", 128)
    dropout = _option(flags, cfg, "dropout", 0.5)
    backbone_epochs = _option(flags, cfg, "backbone_epochs", 40)
    epochs = _option(flags, cfg, "epochs", 60)
    batch = _option(flags, cfg, "batch", 32)
    lr = _option(flags, cfg, "lr", 2e-3)
    lambda1 = _option(flags, cfg, "lambda1", 0.5)
    seed = _option(flags, cfg, "seed", 0)

    inter, catalog, plan = _load_data_dir(data_dir)
    if genre_profiles:
        by_user = inter.by_user()
        profiles = {}
        for u in plan.role:
            inputs = set(plan.input_items[u])
            positives = [int(inter.item[i]) for i in by_user[u]
                         if int(inter.item[i]) in inputs and inter.implicit[i]]
            profiles[u] = genre_profile(positives, catalog)
    else:
        if not summaries_path:
            raise click.UsageError("--summaries is required unless --genre-profiles is set")
        profiles = {u: s.text for u, s in _corpus_map(summaries_path).items()}

    data = prepare_training_data(inter, plan, catalog, profiles)
    spec = BackboneSpec(kind=backbone_kind, n_items=catalog.n_items, latent_dim=latent,
                        hidden_dims=(hidden,), dropout=dropout,
                        macrid=MacridOptions() if backbone_kind == "macrid-vae" else None)
    backbone = build_backbone(spec, seed=seed + 1)
    backbone_history = train_backbone(
        backbone, data.x_train, data.y_train, data.val_cases, data.item_order,
        BackboneTrainConfig(epochs=backbone_epochs, batch=min(500, len(data.train_users)),
                            seed=seed + 1))

    n_concepts = spec.macrid.n_concepts if spec.kind == "macrid-vae" else 1
    if genre_profiles:
        encoder = GenreProfileEncoder(catalog.n_genres, latent, n_concepts=n_concepts,
                                      seed=seed + 2)
    else:
        encoder = HashedTextEncoder(latent, n_concepts=n_concepts, seed=seed + 2)
    model = AlignedRecommender(backbone, encoder, catalog)
    train_cfg = TrainConfig(epochs=epochs, batch=batch, seed=seed, lambda1=lambda1, lr=lr)
    result = train(model, data, train_cfg)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    checksum = save_checkpoint(model, out_dir / "checkpoint.pt")
    write_history(backbone_history, out_dir / "backbone_history.jsonl")
    write_history(result.history, out_dir / "history.jsonl")
    write_manifest(out_dir / "manifest.json", command="train",
                   backbone=backbone_kind, latent=latent, hidden=hidden,
                   dropout=dropout, backbone_epochs=backbone_epochs,
                   train_config=train_cfg.__dict__, seed=seed,
                   genre_profiles=genre_profiles,
                   interactions_hash=inter.content_hash(),
                   catalog_hash=catalog.content_hash(), frozen_checksum=checksum,
                   best_epoch=result.best_epoch, best_metric=result.best_metric)
    click.echo(f"best validation metric {result.best_metric:.4f} at epoch "
               f"{result.best_epoch}; checkpoint -> {out_dir / 'checkpoint.pt'}")


main.add_command(train_cmd, name="train")


def _load_model(data_dir: str, checkpoint: str):
    from ..models import load_checkpoint

    inter, catalog, plan = _load_data_dir(data_dir)
    model = load_checkpoint(checkpoint, catalog)
    return inter, catalog, plan, model


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--config", type=click.Path(exists=True))
@click.option("--alpha", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--split", type=click.Choice(["validation", "test"]), default="test")
@click.option("--out", required=True, type=click.Path())
@click.option("--label", default="aligned", help="Model label for the table key.")
def evaluate(data_dir, summaries_path, checkpoint, config, alpha, k, split, out, label) -> None:
    """Recall@k and NDCG@k for held-out users at one mixing weight."""
    from ..metrics import ndcg_at_k, recall_at_k
    from ..ranking import rank_items
    import torch

    cfg = _load_config(config)
    alpha = alpha if alpha is not None else cfg.get("alpha", 0.5)
    k = k if k is not None else cfg.get("k", 20)
    inter, catalog, plan, model = _load_model(data_dir, checkpoint)
    profiles = {u: s.text for u, s in _corpus_map(summaries_path).items()}
    data = prepare_training_data(inter, plan, catalog, profiles)
    cases = data.val_cases if split == "validation" else data.test_cases
    rows = torch.from_numpy(np.stack([c.row for c in cases]).astype(np.float32))
    with torch.no_grad():
        z_r = model.encode_blackbox(rows).mu
        if alpha > 0:
            z_s = model.encode_profile([c.profile for c in cases]).mu
            z = alpha * z_s + (1 - alpha) * z_r
        else:
            z = z_r
        probs = model.decode(z).numpy()
    recalls, ndcgs = [], []
    for i, case in enumerate(cases):
        ranked = rank_items(probs[i], model.item_order, case.seen, k)
        recalls.append(recall_at_k(ranked, case.positives, k))
        ndcgs.append(ndcg_at_k(ranked, case.positives, k))
    out_path = Path(out)
    dataset = Path(data_dir).name
    with out_path.open("w") as fh:
        fh.write("model,dataset,alpha,seed,metric,k,mean,std,n_users\n")
        for name, values in (("recall", recalls), ("ndcg", ndcgs)):
            fh.write(f"{label},{dataset},{alpha},{plan.seed},{name},{k},"
                     f"{np.mean(values):.6f},{np.std(values):.6f},{len(values)}\n")
    write_manifest(out_path.with_suffix(".manifest.json"), command="evaluate",
                   alpha=alpha, k=k, split=split, checkpoint=str(checkpoint),
                   summaries=str(summaries_path))
    click.echo(f"recall@{k}={np.mean(recalls):.4f} ndcg@{k}={np.mean(ndcgs):.4f} -> {out_path}")


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        lo, hi, step = (float(p) for p in text.split(":"))
        grid = []
        a = lo
        while a <= hi + 1e-9:
            grid.append(round(a, 10))
            a += step
        return grid
    return [float(p) for p in text.split(",")]


@main.command()
@click.argument("task", type=click.Choice(
    ["large-scope", "fine-grained", "guided", "genre-flip", "alpha-sweep", "make-demo"]))
@click.option("--data", "data_dir", type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", type=click.Path(exists=True))
@click.option("--checkpoint", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", type=click.Path(exists=True))
@click.option("--grid", default=None, help="Alpha grid, lo:hi:step or comma list.")
@click.option("--k", type=int, default=None)
@click.option("--flipped", "flipped_path", type=click.Path(exists=True),
              help="Stored flip-edit corpus (large-scope, alpha-sweep).")
@click.option("--themes", "themes_path", type=click.Path(exists=True),
              help="Item->theme-words map enabling the offline fine-grained editor.")
@click.option("--rank-window", default=None)
@click.option("--mode", type=click.Choice(["swap", "one-hot-upper-bound"]), default="swap")
@click.option("--seed", type=int, default=None)
def bench(task, data_dir, summaries_path, checkpoint, out, config, grid, k, flipped_path,
          themes_path, rank_window, mode, seed) -> None:
    """Run a controllability task against a trained checkpoint."""
    cfg_doc = _load_config(config)
    grid = grid if grid is not None else cfg_doc.get("grid", "0:1:0.25")
    k = k if k is not None else cfg_doc.get("k", 20)
    rank_window = rank_window if rank_window is not None else cfg_doc.get("rank_window", "100:500")
    from ..bench import SyntheticConfig, generate
    from ..bench.tasks import (
        FlipRecord,
        alpha_sweep,
        run_fine_grained,
        run_genre_flip,
        run_guided,
        run_large_scope,
    )
    from ..summaries.synth import insert_theme_sentence

    out_dir = Path(out)
    if task == "make-demo":
        ds = generate(SyntheticConfig(seed=seed) if seed is not None else SyntheticConfig())
        paths = ds.write_files(out_dir)
        save_corpus(ds.summaries.values(), out_dir / "summaries.jsonl")
        with (out_dir / "flipped.jsonl").open("w") as fh:
            for user, record in sorted(ds.flipped.items()):
                doc = record.summary.to_record()
                doc.update({"favorite": record.favorite,
                            "least_favorite": record.least_favorite})
                fh.write(json.dumps(doc, sort_keys=True) + "\n")
        themes = {str(i): ds.theme_words_for_item(i) for i in ds.catalog.item_order}
        (out_dir / "themes.json").write_text(json.dumps(themes, indent=0, sort_keys=True))
        ds.plan.save(out_dir / "split_plan.json")
        write_manifest(out_dir / "manifest.json", command="bench make-demo",
                       config=ds.config.__dict__)
        click.echo(f"demo corpus -> {out_dir} (run ingest on {paths['ratings']})")
        return

    if not (data_dir and checkpoint):
        raise click.UsageError("--data and --checkpoint are required for task runs")
    inter, catalog, plan, model = _load_model(data_dir, checkpoint)
    alphas = _parse_grid(grid)
    if not model.genre_based and not summaries_path:
        raise click.UsageError("--summaries is required for text-profile models")
    corpus = _corpus_map(summaries_path) if summaries_path else {}
    profiles = {u: s.text for u, s in corpus.items()}
    if model.genre_based:
        from ..models.genre import genre_profile

        by_user = inter.by_user()
        profiles = {}
        for u in plan.role:
            inputs = set(plan.input_items[u])
            positives = [int(inter.item[i]) for i in by_user[u]
                         if int(inter.item[i]) in inputs and inter.implicit[i]]
            profiles[u] = genre_profile(positives, catalog)
    data = prepare_training_data(inter, plan, catalog, profiles)

    def load_flipped() -> dict[int, FlipRecord]:
        if not flipped_path:
            raise click.UsageError(f"--flipped is required for {task}")
        records = {}
        with Path(flipped_path).open() as fh:
            for line in fh:
                if line.strip():
                    doc = json.loads(line)
                    records[doc["user"]] = FlipRecord(
                        summary=UserSummary.from_record(doc),
                        favorite=doc["favorite"], least_favorite=doc["least_favorite"])
        return records

    if task == "large-scope":
        run = run_large_scope(model, catalog, data.test_cases, profiles, load_flipped(),
                              alphas, k)
    elif task == "alpha-sweep":
        run = alpha_sweep(model, catalog, data.test_cases, profiles, load_flipped(),
                          alphas, k, val_cases=data.val_cases)
    elif task == "guided":
        run = run_guided(model, catalog, data.test_cases, k)
    elif task == "genre-flip":
        run = run_genre_flip(model, catalog, data.test_cases, mode, alphas, k)
    else:  # fine-grained
        if not themes_path:
            raise click.UsageError("--themes is required for the offline fine-grained editor")
        themes = {int(i): words for i, words in json.loads(Path(themes_path).read_text()).items()}

        def editor(summary: UserSummary, item: int, rerun: int) -> UserSummary:
            return insert_theme_sentence(summary, themes[item], seed=1000 * item + rerun)

        lo, hi = (int(p) for p in rank_window.split(":"))
        run = run_fine_grained(model, data.test_cases, corpus, editor, alphas,
                               rank_window=(lo, hi), seed=seed if seed is not None else 0)
    path = run.save(out_dir)
    click.echo(f"{task} -> {path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port) -> None:
    """Start the HTTP gateway over a trained checkpoint."""
    import uvicorn

    from .app import create_app
    from .service import RecommenderService, ServeConfig, ServiceError

    cfg = ServeConfig.from_file(config_path)
    try:
        service = RecommenderService.from_config(cfg)
    except Exception as exc:
        click.echo(f"startup failed: {exc}", err=True)
        sys.exit(1)
    app = create_app(service)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port, log_level="warning")


@main.command(name="export-latents")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--alpha", type=float, default=0.5)
@click.option("--out", required=True, type=click.Path())
def export_latents(data_dir, summaries_path, checkpoint, alpha, out) -> None:
    """Per-user latent means (history, profile, mixed) for visualization."""
    import torch

    inter, catalog, plan, model = _load_model(data_dir, checkpoint)
    corpus = _corpus_map(summaries_path)
    data = prepare_training_data(inter, plan, catalog,
                                 {u: s.text for u, s in corpus.items()})
    users = data.train_users + [c.user for c in data.val_cases + data.test_cases]
    x_all, _ = build_matrices(inter, plan, users, catalog)
    with Path(out).open("w") as fh, torch.no_grad():
        for i, user in enumerate(users):
            z_r = model.encode_blackbox(x_all[i]).mu[0]
            record = {"user": user, "mu_r": [round(v, 6) for v in z_r.tolist()]}
            if user in corpus:
                z_s = model.encode_text([corpus[user].text]).mu[0]
                record["mu_s"] = [round(v, 6) for v in z_s.tolist()]
                record["z_c"] = [round(v, 6) for v in (alpha * z_s + (1 - alpha) * z_r).tolist()]
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    write_manifest(Path(out).with_suffix(".manifest.json"), command="export-latents",
                   alpha=alpha, checkpoint=str(checkpoint), users=len(users))
    click.echo(f"latents for {len(users)} users -> {out}")


if __name__ == "__main__":
    main()
