"""Command line interface.

Exit codes: 0 ok, 2 configuration error, 3 backend error, 4 validation
error. The NC_BACKEND_URL environment variable overrides the backend
endpoint from the config file.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import raster, report
from .backend import BackendError, make_backend
from .layout import LayoutError, SizedAsset, propose_layout
from .metrics import compute_metrics
from .pipeline import PipelineBackendError, pick_target_asset, run_pipeline
from .saliency import apply_center_bias, compute_saliency, load_saliency
from .strength import StrengthTrainingSet, fit_strength_model
from .template import ConfigError, TemplateValidationError, load_config, load_template

EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_VALIDATION = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Legibility boosting for design templates."""


@main.command()
@click.option("--template", "template_path", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--backend", "backend_spec", default=None, help="mock or a base URL")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--paradigm", type=click.Choice(["sdedit", "diffedit"]), default=None)
@click.option("--variations", type=int, default=None)
@click.option("--seed", type=int, default=None)
def enhance(template_path, config_path, backend_spec, out_dir, paradigm, variations, seed):
    """Run the full pipeline and write the variation catalog."""
    from dataclasses import replace

    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        template = load_template(template_path)
    except TemplateValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))

    if paradigm is not None:
        cfg = replace(cfg, paradigm=paradigm)
    if variations is not None:
        try:
            cfg = replace(cfg, variations=variations)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
    if seed is not None:
        cfg = replace(cfg, seed=seed)

    spec = os.environ.get("NC_BACKEND_URL") or backend_spec or cfg.backend
    try:
        backend = make_backend(spec)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))

    try:
        run = run_pipeline(template, cfg, backend, out_dir)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except PipelineBackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    click.echo(f"wrote {len(run.variations)} variation(s) to {out_dir}")


@main.command()
@click.option("--original", "original_path", required=True, type=click.Path())
@click.option("--edited", "edited_path", required=True, type=click.Path())
@click.option("--template", "template_path", required=True, type=click.Path())
@click.option("--report-dir", "report_dir", default=None, type=click.Path(),
              help="Also write metrics.csv and figures here.")
def metrics(original_path, edited_path, template_path, report_dir):
    """Compare an edited image against the original for a template."""
    try:
        template = load_template(template_path)
    except TemplateValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if not template.assets:
        _fail(EXIT_VALIDATION, "template has no assets to measure against")
    target = pick_target_asset(template.assets)
    if target.bbox is None:
        _fail(EXIT_VALIDATION, f"asset {target.id!r} has no bbox; metrics need a layout")
    original = raster.load_image(original_path)
    edited = raster.load_image(edited_path)
    try:
        rep = compute_metrics(original, edited, target.color, target.bbox)
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(rep.CSV_HEADER)
    click.echo(rep.csv_row())
    if report_dir:
        paths = report.render_metrics_report(original, edited, rep, report_dir)
        for p in paths:
            click.echo(f"wrote {p}")


@main.command("fit-strength")
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--c-reg", type=float, default=10.0, show_default=True)
@click.option("--epsilon", type=float, default=0.05, show_default=True)
@click.option("--gamma", type=float, default=None)
@click.option("--plot", "plot_path", default=None, type=click.Path(),
              help="Render the fitted curve to this file.")
def fit_strength(data_path, out_path, c_reg, epsilon, gamma, plot_path):
    """Fit the strength regressor from a training-set JSON file."""
    try:
        data = StrengthTrainingSet.from_json_file(data_path)
    except FileNotFoundError:
        _fail(EXIT_CONFIG, f"training data not found: {data_path}")
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, f"invalid training data: {exc}")
    model = fit_strength_model(data, c_reg=c_reg, epsilon_tube=epsilon, gamma=gamma)
    model.to_json_file(out_path)
    click.echo(f"fitted {len(model.support_norms)} support vectors; wrote {out_path}")
    if plot_path:
        report.render_strength_curve(model, plot_path, data)
        click.echo(f"wrote {plot_path}")


@main.command("propose-layout")
@click.option("--template", "template_path", required=True, type=click.Path())
@click.option("--saliency", "saliency_path", default=None, type=click.Path(),
              help="External 8-bit saliency map (skips the built-in estimator).")
@click.option("--report-dir", "report_dir", default=None, type=click.Path(),
              help="Also write placements.csv and a preview figure here.")
def propose_layout_cmd(template_path, saliency_path, report_dir):
    """Propose asset placements on low-saliency regions."""
    try:
        template = load_template(template_path)
    except TemplateValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if saliency_path:
        heat = load_saliency(saliency_path)
        if heat.shape != (template.canvas_h, template.canvas_w):
            _fail(EXIT_VALIDATION, "saliency map size must match the canvas")
    elif template.saliency is not None:
        heat = template.saliency
    elif template.background is not None:
        heat = apply_center_bias(compute_saliency(template.background))
    else:
        heat = raster.white_canvas(template.canvas_h, template.canvas_w)[:, :, 0] * 0.0
    try:
        proposal = propose_layout(
            heat,
            [SizedAsset(a.id, *a.extent) for a in template.assets],
            list(template.fixed_elements),
        )
    except LayoutError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    payload = {
        "total_score": proposal.total_score,
        "placements": [
            {"asset_id": p.asset_id, "bbox": list(p.bbox), "score": p.score,
             "degraded": p.degraded}
            for p in proposal.placements
        ],
    }
    click.echo(json.dumps(payload, indent=2))
    if report_dir:
        os.makedirs(report_dir, exist_ok=True)
        csv_path = os.path.join(report_dir, "placements.csv")
        fig_path = os.path.join(report_dir, "layout.png")
        report.write_layout_csv(proposal, csv_path)
        report.render_layout_preview(heat, proposal, fig_path)
        click.echo(f"wrote {csv_path}")
        click.echo(f"wrote {fig_path}")


if __name__ == "__main__":
    main()
