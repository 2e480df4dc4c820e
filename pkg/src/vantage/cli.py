"""Command-line front end.

Subcommands mirror the kinds of evidence a campaign produces:

* ``run``          one campaign, record written as CSV
* ``compare``      strategy sweep over seeds, summary + regret curves
* ``heatmap``      oracle surface matrix/plot with sampled points overlaid
* ``theory-check`` regret-envelope, convergence-trend, and interval checks

Exit codes: 0 success, 1 config error, 2 campaign failure, 3 theory-check
assertion failure.
"""

import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .campaign import (
    CampaignConfig,
    CampaignRecord,
    landscape_optimum,
    regret_report,
    run_strategy,
)
from .config import parse_compare_config, parse_config
from .errors import ConfigError, VantageError
from .records import read_record_rows, record_to_rows, rows_to_csv, rows_to_record, run_id
from .seeding import ROLE_RUN, split_seed
from .simulator import preset_landscape, success_confidence_interval

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CAMPAIGN = 2
EXIT_THEORY = 3


@dataclass
class RunManifest:
    """Resolved plan for a comparison sweep plus post-run timings."""

    config_path: str | None
    out_dir: Path
    strategies: list[str]
    seeds: list[int]
    configs: dict[str, CampaignConfig]
    workers: int
    version: str
    wall_clock: dict[str, float]

    def to_json(self) -> str:
        payload = {
            "config_path": self.config_path,
            "out_dir": str(self.out_dir),
            "strategies": self.strategies,
            "seeds": self.seeds,
            "workers": self.workers,
            "version": self.version,
            "wall_clock_seconds": self.wall_clock,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _load_config_text(config_path: str | None) -> str:
    if config_path is None:
        return ""
    return Path(config_path).read_text(encoding="utf-8")


def _apply_preset(cfg: CampaignConfig, preset: str | None) -> CampaignConfig:
    if preset is None:
        return cfg
    return replace(cfg, landscape=preset_landscape(preset))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _final_oracle(rows: list[dict]) -> float:
    """Oracle value of the final selection, recomputed from CSV rows."""
    best = max(range(len(rows)), key=lambda i: (rows[i]["observed_J"], -i))
    return rows[best]["oracle_J"]


def _execute_run(cfg: CampaignConfig, out_dir: str) -> tuple[str, int, float, float]:
    start = time.perf_counter()
    record = run_strategy(cfg)
    rows = record_to_rows(record, cfg)
    run_dir = Path(out_dir) / run_id(record.strategy, record.seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(run_dir / "record.csv", rows_to_csv(rows))
    return record.strategy, record.seed, _final_oracle(rows), time.perf_counter() - start


def build_manifest(
    config_path: str | None,
    out_dir: Path,
    seeds: int,
    workers: int,
    preset: str | None,
) -> RunManifest:
    base, strategies = parse_compare_config(_load_config_text(config_path))
    base = _apply_preset(base, preset)
    run_seeds = [split_seed(base.master_seed, ROLE_RUN, i) for i in range(seeds)]
    configs = {strategy: replace(base, strategy=strategy) for strategy in strategies}
    return RunManifest(
        config_path=config_path,
        out_dir=out_dir,
        strategies=strategies,
        seeds=run_seeds,
        configs=configs,
        workers=workers,
        version=__version__,
        wall_clock={},
    )


def _quantile(values: list[float], q: float) -> float:
    return float(np.quantile(np.asarray(values), q))


def _summary_rows(results: dict[str, list[float]]) -> list[list[str]]:
    rows = [["strategy", "runs", "median_final_oracle_J", "iqr_low", "iqr_high"]]
    for strategy, finals in results.items():
        rows.append(
            [
                strategy,
                str(len(finals)),
                repr(_quantile(finals, 0.5)),
                repr(_quantile(finals, 0.25)),
                repr(_quantile(finals, 0.75)),
            ]
        )
    return rows


def run_compare(manifest: RunManifest) -> int:
    """Execute every (strategy, seed) pair and write the sweep outputs.

    Per-run CSVs land in ``<out>/<strategy>_s<seed>/record.csv``; the
    summary table and regret-curve data are derived from those rows, so
    partial outputs survive a failing run (nonzero exit).
    """
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (replace(manifest.configs[strategy], master_seed=seed), str(manifest.out_dir))
        for strategy in manifest.strategies
        for seed in manifest.seeds
    ]
    failed = False
    finals: dict[str, list[float]] = {s: [] for s in manifest.strategies}
    try:
        if manifest.workers > 1:
            with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
                outcomes = list(pool.map(_execute_run_star, jobs))
        else:
            outcomes = [_execute_run(*job) for job in jobs]
    except VantageError as err:
        click.echo(f"campaign failed: {err}", err=True)
        failed = True
        outcomes = []
    for strategy, seed, final, wall in outcomes:
        finals[strategy].append(final)
        manifest.wall_clock[run_id(strategy, seed)] = wall

    if not failed:
        curves = [["strategy", "seed", "step", "oracle_J", "cumulative_regret", "average_success"]]
        for strategy in manifest.strategies:
            for seed in manifest.seeds:
                rows = read_record_rows(manifest.out_dir / run_id(strategy, seed) / "record.csv")
                running = 0.0
                for step, row in enumerate(rows, start=1):
                    running += row["oracle_J"]
                    curves.append(
                        [
                            strategy,
                            str(seed),
                            str(step),
                            repr(row["oracle_J"]),
                            repr(row["cumulative_regret"]),
                            repr(running / step),
                        ]
                    )
        _atomic_write(manifest.out_dir / "summary.csv", "\n".join(",".join(r) for r in _summary_rows(finals)) + "\n")
        _atomic_write(manifest.out_dir / "regret_curves.csv", "\n".join(",".join(r) for r in curves) + "\n")
    _atomic_write(manifest.out_dir / "manifest.json", manifest.to_json() + "\n")
    return EXIT_CAMPAIGN if failed else EXIT_OK


def _execute_run_star(job):
    return _execute_run(*job)


def emit_heatmap(record: CampaignRecord, cfg: CampaignConfig, resolution: int, out_dir: Path) -> tuple[Path, Path]:
    """Oracle-surface matrix (text) and raster plot with sampled points.

    Sampled points are drawn larger the more recent their iteration, so
    the search's progression toward the optimum reads at a glance.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    out_dir.mkdir(parents=True, exist_ok=True)
    from .campaign import unit_lattice
    from .simulator import objective_on_unit_square
    from .geometry import normalized_grid

    lattice = unit_lattice(resolution)
    tests = normalized_grid(cfg.rollout.test_grid, cfg.rollout.bounds)
    values = objective_on_unit_square(cfg.landscape, lattice, tests)
    # matrix[i, j] = J(nu_h = i/(res-1), nu_v = j/(res-1))
    matrix = values.reshape(resolution, resolution)
    matrix_path = out_dir / "heatmap_matrix.txt"
    np.savetxt(
        matrix_path,
        matrix,
        header="rows: nu_h ascending; columns: nu_v ascending; values: oracle J",
    )

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        matrix.T,
        origin="lower",
        extent=(0.0, 1.0, 0.0, 1.0),
        cmap="viridis",
        aspect="auto",
    )
    fig.colorbar(image, ax=ax, label="oracle J")
    n_iter = max(it.iteration for it in record.iterations)
    for it in record.iterations:
        if not it.points:
            continue
        size = 20.0 + 60.0 * (it.iteration / max(n_iter, 1))
        xs = [p.nu_h for p in it.points]
        ys = [p.nu_v for p in it.points]
        ax.scatter(xs, ys, s=size, facecolors="none", edgecolors="white", linewidths=1.0)
    best = record.final_selection.point
    ax.scatter([best.nu_h], [best.nu_v], marker="*", s=160, color="red", label="selected")
    ax.set_xlabel("nu_h")
    ax.set_ylabel("nu_v")
    ax.set_title(f"{record.strategy} (seed {record.seed})")
    ax.legend(loc="lower right")
    image_path = out_dir / "heatmap.png"
    fig.savefig(image_path, dpi=130)
    plt.close(fig)
    return matrix_path, image_path


@dataclass
class TheoryCheck:
    name: str
    value: float
    threshold: str
    passed: bool


def theory_checks(
    preset: str,
    seeds: int,
    rounds: int,
    base: CampaignConfig | None = None,
) -> list[TheoryCheck]:
    """Empirical checks of the regret/convergence/concentration claims.

    Campaigns run with the round-indexed exploration schedule.  The
    regret envelope is checked on the requested preset; the convergence
    trend on all presets at rounds {2, 4, 8} (clipped to ``rounds``).
    """
    from .campaign import run_campaign

    checks: list[TheoryCheck] = []
    base = base if base is not None else CampaignConfig(landscape=preset_landscape(preset))

    def schedule_cfg(landscape, seed) -> CampaignConfig:
        return replace(
            base,
            landscape=landscape,
            iterations=rounds,
            master_seed=seed,
            acquisition=replace(base.acquisition, use_beta_schedule=True),
        )

    # Cumulative regret against its sqrt(qT gamma_qT beta_T) envelope.
    ratios = []
    reports = {}
    for seed in range(seeds):
        cfg = schedule_cfg(preset_landscape(preset), seed)
        report = regret_report(run_campaign(cfg), cfg.landscape, cfg)
        reports[(preset, seed)] = report
        ratios.extend(report.bound_ratio)
    checks.append(
        TheoryCheck(
            name=f"regret_envelope_{preset}",
            value=max(ratios),
            threshold="max_T R(T)/sqrt(qT*gamma*beta) <= 10",
            passed=max(ratios) <= 10.0,
        )
    )

    # Seed-averaged optimality gap non-increasing at rounds 2, 4, 8.
    taus = [t for t in (2, 4, 8) if t <= rounds]
    for name in ("lift", "pickplace", "square"):
        gaps = []
        for tau in taus:
            per_seed = []
            for seed in range(seeds):
                key = (name, seed)
                if key not in reports:
                    cfg = schedule_cfg(preset_landscape(name), seed)
                    reports[key] = regret_report(run_campaign(cfg), cfg.landscape, cfg)
                report = reports[key]
                per_seed.append(report.optimum_value - report.round_average_success[tau - 1])
            gaps.append(float(np.mean(per_seed)))
        worsening = max(gaps[i + 1] - gaps[i] for i in range(len(gaps) - 1)) if len(gaps) > 1 else 0.0
        checks.append(
            TheoryCheck(
                name=f"convergence_trend_{name}",
                value=worsening,
                threshold="gap(T) non-increasing over T in {2,4,8}",
                passed=worsening <= 1e-12,
            )
        )

    # Concentration interval of the empirical success rate.
    low, high = success_confidence_interval(50, 100, 0.05)
    half = (high - low) / 2.0
    expected = math.sqrt(math.log(40.0) / 200.0)
    checks.append(
        TheoryCheck(
            name="confidence_interval_width",
            value=abs(half - expected),
            threshold="|half_width - sqrt(ln(40)/200)| <= 1e-6",
            passed=abs(half - expected) <= 1e-6,
        )
    )
    return checks


def _theory_table(checks: list[TheoryCheck]) -> str:
    lines = [f"{'check':<28} {'value':>12}  {'criterion':<44} result"]
    for c in checks:
        lines.append(f"{c.name:<28} {c.value:>12.6g}  {c.threshold:<44} {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)


@click.group()
@click.version_option(version=__version__)
def main():
    """Viewpoint-selection campaigns over a simulated fine-tuning black box."""


@main.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="vantage-out")
@click.option("--preset", type=str, default=None, help="Landscape preset overriding the config.")
def run_command(config_path, out_dir, preset):
    """Run one campaign with the configured strategy."""
    try:
        cfg = _apply_preset(parse_config(_load_config_text(config_path)), preset)
    except (ConfigError, ValueError) as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        strategy, seed, final, wall = _execute_run(cfg, out_dir)
    except VantageError as err:
        click.echo(f"campaign failed: {err}", err=True)
        sys.exit(EXIT_CAMPAIGN)
    click.echo(f"{strategy} seed {seed}: final oracle J {final:.4f} ({wall:.1f}s)")
    click.echo(f"record: {Path(out_dir) / run_id(strategy, seed) / 'record.csv'}")


@main.command("compare")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="vantage-compare")
@click.option("--seeds", type=int, default=10, show_default=True, help="Number of runs per strategy.")
@click.option("--workers", type=int, default=1, show_default=True, help="Concurrent runs.")
@click.option("--preset", type=str, default=None)
def compare_command(config_path, out_dir, seeds, workers, preset):
    """Run every configured strategy over a seed sweep at equal budgets."""
    if seeds < 1:
        click.echo("config error: --seeds must be >= 1", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        manifest = build_manifest(config_path, Path(out_dir), seeds, workers, preset)
    except (ConfigError, ValueError) as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    status = run_compare(manifest)
    if status == EXIT_OK:
        click.echo(Path(out_dir).joinpath("summary.csv").read_text(encoding="utf-8").rstrip())
    sys.exit(status)


@main.command("heatmap")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--record", "record_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="vantage-heatmap")
@click.option("--resolution", type=int, default=101, show_default=True)
@click.option("--preset", type=str, default=None)
def heatmap_command(config_path, record_path, out_dir, resolution, preset):
    """Render the oracle surface under a finished run's sampled points."""
    try:
        cfg = _apply_preset(parse_config(_load_config_text(config_path)), preset)
    except (ConfigError, ValueError) as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        record = rows_to_record(read_record_rows(record_path))
        matrix_path, image_path = emit_heatmap(record, cfg, resolution, Path(out_dir))
    except (VantageError, ValueError) as err:
        click.echo(f"heatmap failed: {err}", err=True)
        sys.exit(EXIT_CAMPAIGN)
    click.echo(f"wrote {matrix_path} and {image_path}")


@main.command("theory-check")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--preset", type=str, default="lift", show_default=True)
@click.option("--seeds", type=int, default=10, show_default=True)
@click.option("--rounds", type=int, default=8, show_default=True)
def theory_check_command(config_path, out_dir, preset, seeds, rounds):
    """Empirically check the regret, convergence, and interval claims."""
    try:
        base = _apply_preset(parse_config(_load_config_text(config_path)), preset)
        if seeds < 1 or rounds < 1:
            raise ConfigError("--seeds and --rounds must be >= 1")
    except (ConfigError, ValueError) as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        checks = theory_checks(preset, seeds, rounds, base)
    except VantageError as err:
        click.echo(f"campaign failed: {err}", err=True)
        sys.exit(EXIT_CAMPAIGN)
    table = _theory_table(checks)
    click.echo(table)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "theory_check.txt", table + "\n")
    sys.exit(EXIT_OK if all(c.passed for c in checks) else EXIT_THEORY)


if __name__ == "__main__":
    main()
