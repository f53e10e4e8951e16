"""Command-line front end.

Every command records a run manifest sufficient to reproduce its outputs
bit-exactly with synthetic scorers; the manifest is embedded in CSV
comment lines, JSON documents and PNG text chunks.  ``manifest.json``
additionally records the wall time, which is why only the embedded copy
is covered by the byte-identity guarantee.

Exit codes: 2 configuration error, 3 scorer error, 4 I/O error.
"""

from __future__ import annotations

import functools
import json
import pathlib
import sys
import time
from dataclasses import replace

import click
import numpy as np
from PIL import Image

from . import __version__
from .analysis import (
    Normalization,
    batch_consistency,
    frequency_curve,
    minimal_image,
    noise_baseline_embeddings,
    reconstruct_topk,
    scale_embed,
    spatial_project,
)
from .errors import (
    InvalidParamError,
    InvalidSubbandError,
    NonFiniteError,
    ScorerError,
    ShapeError,
)
from .metrics import AttributionGrid, FeatureSpace, deletion, insertion, mu_fidelity
from .pipeline import WCAMap, WcamConfig, compute_wcam
from .render import render_heatmap
from .sampling import Sampler, SamplerKind
from .scorers import (
    ConstantScore,
    PixelRegionMean,
    RemoteScorer,
    SubbandEnergy,
    SubprocessScorer,
    SyntheticScorer,
    WaveletLinear,
)
from .wavelet import Orientation, SubbandId, WaveletFamily, WaveletSpec

GRID_SCHEMA = "wcam-grid/1"
CURVE_SCHEMA = "wcam-curve/1"
MANIFEST_SCHEMA = "wcam-manifest/1"

_CONFIG_ERRORS = (InvalidParamError, ShapeError, InvalidSubbandError, NonFiniteError)


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except _CONFIG_ERRORS as err:
            click.echo(str(err), err=True)
            sys.exit(2)
        except ScorerError as err:
            click.echo(str(err), err=True)
            sys.exit(3)
        except OSError as err:
            click.echo(str(err), err=True)
            sys.exit(4)

    return wrapper


# --- configuration plumbing -------------------------------------------------


def build_config(grid, designs, levels, wavelet, sampler, seed, batch,
                 score_kind="probability", clamp=True) -> WcamConfig:
    return WcamConfig(
        grid_size=grid,
        n_design=designs,
        sampler=SamplerKind(Sampler(sampler), seed=seed),
        wavelet=WaveletSpec(WaveletFamily(wavelet), levels=levels),
        batch_size=batch,
        score_kind=score_kind,
        clamp_output=clamp,
    )


def load_image(path: str, side: int) -> np.ndarray:
    """Load PNG/JPEG, bilinear-resize to side x side, scale to [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((side, side), Image.BILINEAR)
    return np.asarray(rgb, dtype=np.float64) / 255.0


def _parse_band(label: str, spec: WaveletSpec) -> SubbandId:
    if label == "a":
        return SubbandId(0, Orientation.APPROX)
    ori = {"h": Orientation.HORIZONTAL, "v": Orientation.VERTICAL,
           "d": Orientation.DIAGONAL}.get(label[0])
    if ori is None or not label[1:].isdigit():
        raise InvalidParamError(f"bad subband label {label!r} (use a, h1, v2, ...)")
    return SubbandId(int(label[1:]), ori)


def build_scorer(descriptor: str | None, config: WcamConfig, side: int):
    """Resolve --scorer / WCAM_SCORER_URL into a handle.

    Accepted forms: ``synthetic:<model>[:args]``, an ``http(s)://`` URL, or
    ``subprocess:<command>``.
    """
    import os

    if descriptor is None:
        descriptor = os.environ.get("WCAM_SCORER_URL")
    if not descriptor:
        raise InvalidParamError(
            "no scorer given: pass --scorer or set WCAM_SCORER_URL"
        )
    if descriptor.startswith(("http://", "https://")):
        return RemoteScorer(descriptor, score_kind=config.score_kind,
                            max_batch=config.batch_size)
    if descriptor.startswith("subprocess:"):
        return SubprocessScorer(descriptor.split(":", 1)[1],
                                score_kind=config.score_kind,
                                max_batch=config.batch_size)
    if descriptor.startswith("synthetic:"):
        parts = descriptor.split(":")
        name, args = parts[1], parts[2:]
        if name == "constant":
            model = ConstantScore(float(args[0]) if args else 0.5)
        elif name == "region-mean":
            if args:
                r0, c0, r1, c1 = (int(v) for v in args[0].split(","))
            else:
                r0, c0, r1, c1 = 0, 0, side // 2, side // 2
            model = PixelRegionMean(region=(r0, c0, r1, c1))
        elif name == "wavelet-linear":
            rng = np.random.default_rng(int(args[0]) if args else 0)
            model = WaveletLinear(rng.normal(size=(side, side)), config.wavelet)
        elif name == "subband-energy":
            band = _parse_band(args[0] if args else "a", config.wavelet)
            model = SubbandEnergy({band: 1.0}, config.wavelet)
        else:
            raise InvalidParamError(f"unknown synthetic model {name!r}")
        return SyntheticScorer(model, score_kind=config.score_kind)
    raise InvalidParamError(f"unrecognized scorer descriptor {descriptor!r}")


def make_manifest(config: WcamConfig, images, scorer_desc: str, target_class: int,
                  side: int, n_forwards: int | None = None) -> dict:
    """Reproducibility manifest embedded in every artifact.

    Volatile run facts (wall time, output directory) go only into the
    standalone ``manifest.json`` so that re-runs stay byte-identical.
    """
    return {
        "schema": MANIFEST_SCHEMA,
        "tool_version": __version__,
        "config": {
            "grid_size": config.grid_size,
            "n_design": config.n_design,
            "levels": config.wavelet.levels,
            "wavelet": config.wavelet.family.value,
            "boundary": config.wavelet.boundary.value,
            "sampler": config.sampler.kind.value,
            "seed": config.sampler.seed,
            "batch_size": config.batch_size,
            "score_kind": config.score_kind,
            "clamp_output": config.clamp_output,
            "binarize_masks": config.binarize_masks,
            "image_side": side,
        },
        "images": list(images),
        "scorer": scorer_desc,
        "target_class": target_class,
        "n_forwards": n_forwards,
    }


def config_from_manifest(manifest: dict) -> WcamConfig:
    cfg = manifest["config"]
    return build_config(
        grid=cfg["grid_size"], designs=cfg["n_design"], levels=cfg["levels"],
        wavelet=cfg["wavelet"], sampler=cfg["sampler"], seed=cfg["seed"],
        batch=cfg["batch_size"], score_kind=cfg["score_kind"],
        clamp=cfg["clamp_output"],
    )


# --- artifact writers -------------------------------------------------------


def write_grid_csv(path, grid: np.ndarray, manifest: dict, schema=GRID_SCHEMA):
    lines = [f"# schema: {schema}",
             f"# manifest: {json.dumps(manifest, separators=(',', ':'), sort_keys=True)}"]
    for row in np.asarray(grid, dtype=np.float64):
        lines.append(",".join(f"{v:.17g}" for v in row))
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path) -> tuple[np.ndarray, dict]:
    manifest = {}
    rows = []
    for line in pathlib.Path(path).read_text().splitlines():
        if line.startswith("# manifest:"):
            manifest = json.loads(line.split(":", 1)[1])
        elif line.startswith("#") or not line.strip():
            continue
        else:
            rows.append([float(v) for v in line.split(",")])
    return np.asarray(rows), manifest


def write_json(path, payload: dict, manifest: dict):
    doc = dict(payload)
    doc["manifest"] = manifest
    pathlib.Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_curve_csv(path, columns: dict, manifest: dict):
    keys = list(columns)
    lines = [f"# schema: {CURVE_SCHEMA}",
             f"# manifest: {json.dumps(manifest, separators=(',', ':'), sort_keys=True)}",
             ",".join(keys)]
    length = len(next(iter(columns.values())))
    for i in range(length):
        cells = []
        for key in keys:
            v = columns[key][i]
            cells.append(str(v) if isinstance(v, str) else f"{float(v):.17g}")
        lines.append(",".join(cells))
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def wcam_from_csv(path) -> WCAMap:
    grid, manifest = read_grid_csv(path)
    if not manifest:
        raise InvalidParamError(f"{path} carries no embedded manifest")
    config = config_from_manifest(manifest)
    return WCAMap(
        total_indices=grid,
        first_order=grid.copy(),
        config=config,
        target_class=manifest["target_class"],
        n_forwards=manifest.get("n_forwards") or config.n_forwards,
    )


# --- CLI --------------------------------------------------------------------


def _common_options(func):
    options = [
        click.option("--grid", default=28, show_default=True, help="Mask grid side g."),
        click.option("--designs", default=8, show_default=True, help="Design rows N."),
        click.option("--levels", default=2, show_default=True, help="Decomposition depth."),
        click.option("--wavelet", default="haar", show_default=True,
                     type=click.Choice([f.value for f in WaveletFamily])),
        click.option("--sampler", default="sobol", show_default=True,
                     type=click.Choice([s.value for s in Sampler])),
        click.option("--seed", default=0, show_default=True),
        click.option("--batch", default=64, show_default=True, help="Scoring batch size."),
        click.option("--size", default=224, show_default=True,
                     help="Images are bilinear-resized to this side."),
        click.option("--score-kind", default="probability", show_default=True,
                     type=click.Choice(["probability", "logit"])),
        click.option("--no-clamp", is_flag=True,
                     help="Skip clamping perturbed reconstructions to [0, 1]."),
        click.option("--out", default=".", show_default=True, help="Output directory."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(version=__version__)
def main():
    """Wavelet-domain attribution toolkit."""


@main.command("attribute")
@click.option("--image", required=True, help="Input PNG/JPEG.")
@click.option("--scorer", default=None, help="synthetic:<id> | URL | subprocess:<cmd>.")
@click.option("--class", "target_class", default=0, show_default=True)
@_common_options
@_handle_errors
def cmd_attribute(image, scorer, target_class, grid, designs, levels, wavelet,
                  sampler, seed, batch, size, score_kind, no_clamp, out):
    """Compute the attribution map and its spatial projection."""
    started = time.monotonic()
    config = build_config(grid, designs, levels, wavelet, sampler, seed, batch,
                          score_kind, clamp=not no_clamp)
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arr = load_image(image, size)
    handle = build_scorer(scorer, config, size)
    result = compute_wcam(arr, target_class, handle, config)
    manifest = make_manifest(config, [image], handle.describe(), target_class,
                             size, n_forwards=result.n_forwards)
    manifest["target_class"] = target_class
    meta = {"wcam-manifest": json.dumps(manifest, sort_keys=True)}

    write_grid_csv(out_dir / "wcam.csv", result.total_indices, manifest)
    render_heatmap(result.total_indices, out_dir / "wcam.png",
                   levels=config.wavelet.levels, title="total Sobol indices",
                   metadata=meta)
    spatial = spatial_project(result)
    write_grid_csv(out_dir / "spatial.csv", spatial.grid, manifest)
    render_heatmap(spatial.grid, out_dir / "spatial.png",
                   title="spatial projection", metadata=meta)
    full = dict(manifest)
    full["output_dir"] = str(out_dir)
    full["wall_time_s"] = round(time.monotonic() - started, 3)
    full["degenerate"] = result.degenerate
    (out_dir / "manifest.json").write_text(json.dumps(full, indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {out_dir}/wcam.csv ({result.n_forwards} forwards)")


@main.command("metrics")
@click.option("--image", required=True)
@click.option("--attribution", required=True, help="wcam.csv from a previous run.")
@click.option("--scorer", default=None)
@click.option("--class", "target_class", default=0, show_default=True)
@click.option("--steps", default=None, type=int, help="Curve steps (default g*g).")
@click.option("--subset-size", default=None, type=int, help="Fidelity subset size d.")
@click.option("--subsets", default=200, show_default=True, help="Fidelity subset count m.")
@click.option("--seed", default=0, show_default=True)
@click.option("--size", default=224, show_default=True)
@click.option("--out", default=".", show_default=True)
@_handle_errors
def cmd_metrics(image, attribution, scorer, target_class, steps, subset_size,
                subsets, seed, size, out):
    """Deletion and insertion curves plus fidelity correlation."""
    grid, manifest = read_grid_csv(attribution)
    if not manifest:
        raise InvalidParamError(f"{attribution} carries no embedded manifest")
    config = config_from_manifest(manifest)
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arr = load_image(image, size)
    handle = build_scorer(scorer, config, size)
    attr = AttributionGrid(grid, FeatureSpace.WAVELET_CELLS, wavelet=config.wavelet)

    run_manifest = make_manifest(config, [image], handle.describe(), target_class,
                                 size)
    run_manifest["attribution"] = str(attribution)
    run_manifest["target_class"] = target_class

    del_curve = deletion(arr, attr, handle, target_class, steps=steps, clamp=True)
    ins_curve = insertion(arr, attr, handle, target_class, steps=steps, clamp=True)
    write_curve_csv(out_dir / "deletion.csv",
                    {"removed": del_curve.counts, "score": del_curve.scores},
                    run_manifest)
    write_curve_csv(out_dir / "insertion.csv",
                    {"inserted": ins_curve.counts, "score": ins_curve.scores},
                    run_manifest)
    fidelity = mu_fidelity(arr, attr, handle, target_class, subset_size=subset_size,
                           n_subsets=subsets, seed=seed, clamp=True)
    write_json(out_dir / "mufidelity.json", {
        "schema": "wcam-mufidelity/1",
        "correlation": fidelity.correlation,
        "degenerate": fidelity.degenerate,
        "subset_size": fidelity.subset_size,
        "n_subsets": fidelity.n_subsets,
        "seed": seed,
        "deletion_auc": del_curve.auc,
        "insertion_auc": ins_curve.auc,
    }, run_manifest)
    click.echo(f"deletion AUC {del_curve.auc:.4f}, insertion AUC {ins_curve.auc:.4f}, "
               f"fidelity {fidelity.correlation:.4f}")


@main.command("embed")
@click.option("--map", "map_path", required=True, help="wcam.csv from a previous run.")
@click.option("--normalization", default="raw_sum", show_default=True,
              type=click.Choice([n.value for n in Normalization]))
@click.option("--out", default=".", show_default=True)
@_handle_errors
def cmd_embed(map_path, normalization, out):
    """Scale embedding and cumulative frequency-importance curve."""
    wmap = wcam_from_csv(map_path)
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, manifest = read_grid_csv(map_path)
    embedding = scale_embed(wmap, Normalization(normalization))
    curve = frequency_curve(embedding)
    write_json(out_dir / "embedding.json", {
        "schema": "wcam-embedding/1",
        "labels": embedding.labels,
        "values": [float(v) for v in embedding.z],
        "normalization": normalization,
    }, manifest)
    write_curve_csv(out_dir / "curve.csv", {
        "band": curve.labels,
        "normalized": curve.normalized,
        "cumulative": curve.cumulative,
    }, manifest)
    click.echo(f"wrote {out_dir}/embedding.json ({len(embedding.z)} bands)")


@main.command("reconstruct")
@click.option("--image", required=True)
@click.option("--map", "map_path", required=True)
@click.option("--k", "k_values", default="0", show_default=True,
              help="Comma-separated kept-cell counts.")
@click.option("--minimal", is_flag=True, help="Search the smallest sufficient k.")
@click.option("--scorer", default=None, help="Required with --minimal.")
@click.option("--class", "target_class", default=0, show_default=True)
@click.option("--size", default=224, show_default=True)
@click.option("--out", default=".", show_default=True)
@_handle_errors
def cmd_reconstruct(image, map_path, k_values, minimal, scorer, target_class, size, out):
    """Reconstructions keeping only the top-ranked coefficient groups."""
    wmap = wcam_from_csv(map_path)
    _, manifest = read_grid_csv(map_path)
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arr = load_image(image, size)
    for k in (int(v) for v in k_values.split(",")):
        rec = reconstruct_topk(arr, wmap, k)
        png = Image.fromarray((rec * 255.0).round().astype(np.uint8))
        png.save(out_dir / f"topk_{k:03d}.png")
    if minimal:
        handle = build_scorer(scorer, wmap.config, size)
        found = minimal_image(arr, wmap, handle, target_class)
        payload = {
            "schema": "wcam-minimal/1",
            "sufficient": found.sufficient,
            "k": found.k,
            "target_class": target_class,
        }
        if found.sufficient:
            png = Image.fromarray((found.image * 255.0).round().astype(np.uint8))
            png.save(out_dir / "minimal.png")
            payload["image"] = "minimal.png"
            payload["class_scores"] = [float(v) for v in found.class_scores]
        write_json(out_dir / "minimal.json", payload, manifest)
    click.echo(f"wrote reconstructions to {out_dir}")


@main.command("consistency")
@click.option("--image", "images", required=True, multiple=True,
              help="Repeat for each batch member.")
@click.option("--scorer", default=None)
@click.option("--class", "target_class", default=0, show_default=True)
@click.option("--repeats", default=20, show_default=True,
              help="Noise-baseline run count.")
@_common_options
@_handle_errors
def cmd_consistency(images, scorer, target_class, repeats, grid, designs, levels,
                    wavelet, sampler, seed, batch, size, score_kind, no_clamp, out):
    """Pairwise embedding distances with a sampling-noise baseline."""
    started = time.monotonic()
    if len(images) < 2:
        raise InvalidParamError("need at least two --image entries")
    config = build_config(grid, designs, levels, wavelet, sampler, seed, batch,
                          score_kind, clamp=not no_clamp)
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    handle = build_scorer(scorer, config, size)

    embeddings = []
    for i, path in enumerate(images):
        run_cfg = replace(config, sampler=replace(config.sampler, seed=seed + 1 + i))
        arr = load_image(path, size)
        embeddings.append(scale_embed(compute_wcam(arr, target_class, handle, run_cfg)))
    # Baseline seeds start past the batch range so no draw is shared.
    base_cfg = replace(config, sampler=replace(config.sampler, seed=seed + 1 + len(images)))
    baseline = noise_baseline_embeddings(load_image(images[0], size), target_class,
                                         handle, base_cfg, repeats=repeats)
    result = batch_consistency(embeddings, baseline)

    manifest = make_manifest(config, images, handle.describe(), target_class,
                             size)
    manifest["target_class"] = target_class
    pair_labels = [f"{i}-{j}" for i in range(len(images))
                   for j in range(i + 1, len(images))]
    write_curve_csv(out_dir / "distances.csv", {
        "pair": pair_labels,
        "distance": result.distances,
    }, manifest)
    lo, hi = _comparison_interval(result)
    write_json(out_dir / "noise_baseline.json", {
        "schema": "wcam-noise-baseline/1",
        "mean": result.baseline_mean,
        "std": float(result.baseline_distances.std(ddof=1)),
        "n_pairs": int(result.baseline_distances.size),
        "repeats": repeats,
        "batch_mean": result.mean_distance,
        "comparison_interval": [lo, hi],
        "wall_time_s": round(time.monotonic() - started, 3),
    }, manifest)
    click.echo(f"batch mean {result.mean_distance:.5f}, "
               f"noise baseline {result.baseline_mean:.5f}")


def _comparison_interval(result, z: float = 1.96) -> tuple[float, float]:
    """Interval around the baseline mean wide enough to compare the batch
    mean against it (two-sample normal approximation on pairwise samples)."""
    s1 = result.baseline_distances.std(ddof=1)
    n1 = result.baseline_distances.size
    s2 = result.distances.std(ddof=1) if result.distances.size > 1 else s1
    n2 = result.distances.size
    half = z * float(np.sqrt(s1**2 / n1 + s2**2 / n2))
    return (result.baseline_mean - half, result.baseline_mean + half)


if __name__ == "__main__":
    main()
