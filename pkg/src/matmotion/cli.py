"""Batch command-line front end.

Subcommands: dataset {import,synth,stats}, encode, features, train,
crossval, report, selftest. A JSON config file supplies defaults; command
line flags win over config values. All outputs land under --out.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .architectures import ARCH_NAMES, FAMILY_SVM, build_architecture
from .crossval import CvReport, run_crossval
from .dataset import (
    Dataset,
    ManifestError,
    SnippetFormatError,
    import_csv_manifest,
    load_dataset,
    read_snippet,
    write_dataset,
)
from .encoding import CHANNEL_NAMES, cop_overlay, encode
from .engine import TrainConfig, save_net
from .features import VARIANT_FULL24, extract_features, feature_names
from .report import comparison_csv, render_csv, render_text
from .selection import select_best_network, svm_grid_search
from .selftest import run_selftest
from .svm import save_svm
from .synth import (
    BlobSpec,
    SynthSpec,
    generate_synthetic,
    make_two_regime_dataset,
)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")


def _setting(ctx, flag_value, key, default):
    """Flag wins; then the config file; then the default."""
    if flag_value is not None:
        return flag_value
    return ctx.obj["config"].get(key, default)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file with default settings.")
@click.option("--seed", type=int, default=None, help="Global random seed.")
@click.option("--jobs", type=int, default=None, help="Parallel workers.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory.")
@click.pass_context
def main(ctx, config_path, seed, jobs, out_dir):
    """Pressure-mat movement classification toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _load_config(config_path)
    ctx.obj["seed"] = seed
    ctx.obj["jobs"] = jobs
    ctx.obj["out"] = out_dir


def _out_dir(ctx, default="out") -> Path:
    out = ctx.obj.get("out") or ctx.obj["config"].get("out", default)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(ctx, default=0) -> int:
    return _setting(ctx, ctx.obj.get("seed"), "seed", default)


@main.group()
def dataset():
    """Create, import and inspect snippet datasets."""


@dataset.command("import")
@click.option("--manifest", "source_manifest", required=True, type=click.Path(),
              help="Manifest whose paths reference CSV frame dumps.")
@click.pass_context
def dataset_import(ctx, source_manifest):
    """Convert CSV-layout snippets to the canonical binary dataset."""
    out = _out_dir(ctx)
    try:
        manifest_path = import_csv_manifest(source_manifest, out)
    except (SnippetFormatError, ManifestError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {manifest_path}")


@dataset.command("synth")
@click.option("--preset", type=click.Choice(["two-regime"]), default=None,
              help="Built-in generator preset.")
@click.option("--spec", "spec_path", type=click.Path(), default=None,
              help="JSON SynthSpec file for a single snippet class.")
@click.option("--infants", type=int, default=20, show_default=True)
@click.option("--snippets-per-infant", type=int, default=6, show_default=True)
@click.option("--noise", type=float, default=1.0, show_default=True)
@click.pass_context
def dataset_synth(ctx, preset, spec_path, infants, snippets_per_infant, noise):
    """Generate a synthetic dataset and write it with a manifest."""
    seed = _seed(ctx)
    out = _out_dir(ctx)
    if preset == "two-regime" or (preset is None and spec_path is None):
        ds = make_two_regime_dataset(n_infants=infants,
                                     snippets_per_infant=snippets_per_infant,
                                     seed=seed, noise_amplitude=noise)
    else:
        doc = json.loads(Path(spec_path).read_text())
        blobs = tuple(BlobSpec(**blob) for blob in doc.pop("blobs"))
        snippets = []
        for i in range(infants * snippets_per_infant):
            spec = SynthSpec(blobs=blobs, seed=seed + i, **doc)
            snippets.append(generate_synthetic(
                spec, infant_id=f"inf{i // snippets_per_infant:03d}",
                snippet_id=f"spec-{i:04d}"))
        ds = Dataset.in_memory(snippets)
    manifest_path = write_dataset(ds, out)
    click.echo(f"wrote {manifest_path} ({len(ds)} snippets)")


@dataset.command("stats")
@click.option("--manifest", required=True, type=click.Path())
def dataset_stats(manifest):
    """Print label/infant/session counts of a dataset."""
    try:
        ds = load_dataset(manifest)
    except (ManifestError, SnippetFormatError) as exc:
        raise click.ClickException(str(exc))
    counts = ds.label_counts()
    click.echo(
        f"snippets={len(ds)} FM+={counts['FM+']} FM-={counts['FM-']} "
        f"infants={len(ds.infants())}"
    )
    for session, count in sorted(ds.session_counts().items()):
        click.echo(f"session {session}: {count}")
    per_infant: dict[str, int] = {}
    for entry in ds.entries:
        per_infant[entry.infant_id] = per_infant.get(entry.infant_id, 0) + 1
    for infant, count in sorted(per_infant.items()):
        click.echo(f"infant {infant}: {count}")


def _iter_manifest_or_files(manifest, files):
    if manifest:
        ds = load_dataset(manifest)
        yield from ((ds.entries[i].snippet_id or f"snippet{i}", ds.snippet(i))
                    for i in range(len(ds)))
    for path in files:
        snip = read_snippet(path, snippet_id=Path(path).stem)
        yield snip.snippet_id, snip


@main.command("encode")
@click.argument("files", nargs=-1, type=click.Path())
@click.option("--manifest", type=click.Path(), default=None)
@click.option("--overlay", is_flag=True,
              help="Also write per-frame CoP coordinates for plotting.")
@click.pass_context
def encode_cmd(ctx, files, manifest, overlay):
    """Encode snippets to 500x6 signal CSVs."""
    if not files and not manifest:
        raise click.ClickException("give snippet files or --manifest")
    out = _out_dir(ctx)
    count = 0
    try:
        for sid, snip in _iter_manifest_or_files(manifest, files):
            signals = encode(snip)
            target = out / f"{sid}.signals.csv"
            _write_csv(target, CHANNEL_NAMES, signals)
            if overlay:
                coords = cop_overlay(snip)
                _write_csv(out / f"{sid}.cop.csv",
                           ("top_row", "top_col", "bottom_row", "bottom_col"),
                           coords)
            count += 1
    except (SnippetFormatError, ManifestError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"encoded {count} snippet(s) into {out}")


def _write_csv(path: Path, header, matrix):
    lines = [",".join(header)]
    for row in np.asarray(matrix):
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


@main.command("features")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--variant", type=click.Choice(["base12", "full24"]),
              default=VARIANT_FULL24, show_default=True)
@click.option("--output", "output_name", default="features.csv", show_default=True)
@click.pass_context
def features_cmd(ctx, manifest, variant, output_name):
    """Write one feature row per snippet: id, label, then named columns."""
    out = _out_dir(ctx)
    try:
        ds = load_dataset(manifest)
    except (ManifestError, SnippetFormatError) as exc:
        raise click.ClickException(str(exc))
    names = feature_names(variant)
    lines = [",".join(("snippet_id", "label") + names)]
    for i in range(len(ds)):
        snip = ds.snippet(i)
        row = extract_features(encode(snip), variant)
        lines.append(",".join([snip.snippet_id, snip.label]
                              + [repr(float(v)) for v in row]))
    target = out / output_name
    target.write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {target} ({len(ds)} rows)")


def _train_config(ctx, seed: int, overrides: dict | None = None) -> TrainConfig:
    cfg = dict(ctx.obj["config"].get("train", {}))
    cfg.update(overrides or {})
    cfg["seed"] = seed
    return TrainConfig(**cfg)


@main.command("train")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--arch", required=True, type=click.Choice(ARCH_NAMES))
@click.option("--repeats", type=int, default=None,
              help="Training repetitions for network families.  [default: 20]")
@click.option("--max-epochs", type=int, default=None)
@click.pass_context
def train_cmd(ctx, manifest, arch, repeats, max_epochs):
    """Train one model with the per-fold selection protocol, no held-out test.

    Splits infants into fit and validation groups (about one sixth
    validate), runs the family's selection protocol, and saves the chosen
    model plus a selection log.
    """
    from .architectures import INPUT_SIGNALS, network_input
    from .crossval import fit_val_split, network_base_seed
    from .encoding import encode as encode_one
    from .features import VARIANT_BASE12, extract_features as extract

    seed = _seed(ctx)
    repeats = _setting(ctx, repeats, "repeats", 20)
    jobs = _setting(ctx, ctx.obj.get("jobs"), "jobs", 1)
    out = _out_dir(ctx)
    try:
        ds = load_dataset(manifest)
    except (ManifestError, SnippetFormatError) as exc:
        raise click.ClickException(str(exc))
    arch_obj = build_architecture(arch)

    fit_infants, val_infants = fit_val_split(ds.infants(), seed=seed)
    signals = np.stack([encode_one(s) for s in ds.snippets()])
    labels = ds.labels
    infant_ids = np.asarray(ds.infant_ids)
    fit_idx = np.flatnonzero(np.isin(infant_ids, fit_infants))
    val_idx = np.flatnonzero(np.isin(infant_ids, val_infants))

    if arch_obj.input_kind != INPUT_SIGNALS:
        variant = VARIANT_BASE12 if arch_obj.n_features == 12 else VARIANT_FULL24
        x = extract(signals, variant)
    else:
        x = network_input(arch_obj, signals=signals)

    overrides = {} if max_epochs is None else {"max_epochs": max_epochs}
    config = _train_config(ctx, seed, overrides)
    if arch_obj.family == FAMILY_SVM:
        selection = svm_grid_search(arch_obj, x[fit_idx], labels[fit_idx],
                                    x[val_idx], labels[val_idx], seed=seed,
                                    jobs=jobs)
        model_path = out / f"{arch}.svm"
        save_svm(selection.model, model_path)
    else:
        selection = select_best_network(arch_obj, x[fit_idx], labels[fit_idx],
                                        x[val_idx], labels[val_idx], config,
                                        base_seed=network_base_seed(seed, 0),
                                        runs=repeats, jobs=jobs)
        model_path = out / f"{arch}.net"
        save_net(selection.model, model_path)
    log_path = out / f"{arch}.selection.json"
    log_path.write_text(json.dumps(selection.log(), indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {model_path} and {log_path}")


@main.command("crossval")
@click.option("--manifest", type=click.Path(), default=None,
              help="Dataset manifest; omit to use a synthetic two-regime set.")
@click.option("--arch", "archs", multiple=True,
              help="Architecture name(s); 'all' for the whole catalog.")
@click.option("--repeats", type=int, default=None,
              help="Training repetitions per fold.  [default: 20]")
@click.option("--folds", type=int, default=None, help="Folds.  [default: 5]")
@click.option("--max-epochs", type=int, default=None)
@click.pass_context
def crossval_cmd(ctx, manifest, archs, repeats, folds, max_epochs):
    """Run grouped cross-validation and write reports and tables."""
    seed = _seed(ctx)
    repeats = _setting(ctx, repeats, "repeats", 20)
    folds = _setting(ctx, folds, "folds", 5)
    jobs = _setting(ctx, ctx.obj.get("jobs"), "jobs", 1)
    arch_list = list(archs) or ctx.obj["config"].get("archs", [])
    if arch_list == ["all"] or arch_list == "all":
        arch_list = list(ARCH_NAMES)
    if not arch_list:
        raise click.ClickException("no architectures given (--arch or config)")
    for name in arch_list:
        if name not in ARCH_NAMES:
            raise click.ClickException(f"unknown architecture {name!r}")
    out = _out_dir(ctx)

    if manifest:
        try:
            ds = load_dataset(manifest)
        except (ManifestError, SnippetFormatError) as exc:
            raise click.ClickException(str(exc))
    else:
        ds = make_two_regime_dataset(seed=seed)

    overrides = {} if max_epochs is None else {"max_epochs": max_epochs}
    config = _train_config(ctx, seed, overrides)
    reports = []
    failed = False
    for name in arch_list:
        try:
            report = run_crossval(ds, name, config=config, seed=seed,
                                  repeats=repeats, k=folds, jobs=jobs)
        except Exception as exc:  # noqa: BLE001 - report and fail the command
            click.echo(f"{name}: FAILED ({exc})", err=True)
            failed = True
            continue
        (out / f"report_{name}.json").write_text(report.to_json())
        reports.append(report)
        agg = report.aggregate["balanced_accuracy"]
        mean = agg["mean"]
        shown = "undefined" if mean is None else f"{mean * 100.0:.2f}%"
        click.echo(f"{name}: balanced accuracy {shown}")
    if reports:
        (out / "tables.txt").write_text(render_text(reports))
        (out / "tables.csv").write_text(render_csv(reports))
        (out / "comparisons.csv").write_text(comparison_csv(reports))
    if failed:
        raise click.ClickException("one or more architectures failed; "
                                   "partial outputs are in " + str(out))
    click.echo(f"reports written to {out}")


@main.command("report")
@click.argument("report_files", nargs=-1, required=True, type=click.Path())
@click.pass_context
def report_cmd(ctx, report_files):
    """Re-render tables from saved cross-validation reports."""
    out = _out_dir(ctx)
    reports = []
    for path in report_files:
        try:
            reports.append(CvReport.from_json(Path(path).read_text()))
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"cannot load report {path}: {exc}")
    text = render_text(reports)
    (out / "tables.txt").write_text(text)
    (out / "tables.csv").write_text(render_csv(reports))
    (out / "comparisons.csv").write_text(comparison_csv(reports))
    click.echo(text, nl=False)


@main.command("selftest")
@click.option("--inject-fault", type=click.Choice(["gradients"]), default=None,
              hidden=True)
def selftest_cmd(inject_fault):
    """Run the embedded verification battery."""
    ok, lines = run_selftest(inject_fault)
    for line in lines:
        click.echo(line)
    if not ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
