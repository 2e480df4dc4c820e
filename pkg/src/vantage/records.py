"""Flat CSV serialization of campaign records.

One row per simulator evaluation with the columns below; everything in
the summary tables is recomputable from these files.  Floats are written
with ``repr`` (shortest round-trip form), so parsing a file back yields
bit-identical values and re-serializing is byte-identical.
"""

import csv
import io
from dataclasses import replace

from .campaign import CampaignConfig, CampaignRecord, IterationRecord, _select_best, landscape_optimum
from .geometry import NormalizedPoint, denormalize
from .simulator import EvaluationResult, true_objective

CSV_COLUMNS = [
    "run_id",
    "strategy",
    "seed",
    "iteration",
    "index_in_batch",
    "nu_h",
    "nu_v",
    "theta_h_rad",
    "theta_v_rad",
    "observed_J",
    "oracle_J",
    "best_so_far",
    "cumulative_regret",
]


def run_id(strategy: str, seed: int) -> str:
    return f"{strategy}_s{seed}"


def record_to_rows(record: CampaignRecord, cfg: CampaignConfig) -> list[dict]:
    """Evaluation-level rows; regret is against the exhaustive-grid optimum."""
    _, optimum = landscape_optimum(cfg.landscape, cfg.rollout.test_grid, cfg.rollout.bounds)
    rows = []
    cumulative = 0.0
    best = -1.0
    rid = run_id(record.strategy, record.seed)
    for it in record.iterations:
        for j, ev in enumerate(it.evaluations):
            point = ev.train_point
            angles = denormalize(point, cfg.bounds)
            oracle = true_objective(cfg.landscape, point, cfg.rollout.test_grid, cfg.rollout.bounds)
            cumulative += optimum - oracle
            best = max(best, ev.mean_success)
            rows.append(
                {
                    "run_id": rid,
                    "strategy": record.strategy,
                    "seed": record.seed,
                    "iteration": it.iteration,
                    "index_in_batch": j,
                    "nu_h": point.nu_h,
                    "nu_v": point.nu_v,
                    "theta_h_rad": angles.theta_h,
                    "theta_v_rad": angles.theta_v,
                    "observed_J": ev.mean_success,
                    "oracle_J": oracle,
                    "best_so_far": best,
                    "cumulative_regret": cumulative,
                }
            )
    return rows


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_record_csv(record: CampaignRecord, cfg: CampaignConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(record_to_rows(record, cfg)))


def read_record_rows(path_or_text) -> list[dict]:
    """Parse rows back with native types (ints, floats, strings)."""
    if hasattr(path_or_text, "read"):
        text = path_or_text.read()
    else:
        try:
            with open(path_or_text, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, ValueError):
            text = str(path_or_text)
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for raw in reader:
        rows.append(
            {
                "run_id": raw["run_id"],
                "strategy": raw["strategy"],
                "seed": int(raw["seed"]),
                "iteration": int(raw["iteration"]),
                "index_in_batch": int(raw["index_in_batch"]),
                **{k: float(raw[k]) for k in CSV_COLUMNS[5:]},
            }
        )
    return rows


def rows_to_record(rows: list[dict]) -> CampaignRecord:
    """Rebuild a record from CSV rows.

    Per-test-point rollout detail is not part of the CSV schema, so the
    reconstructed evaluations carry only the observed summary
    (``per_test_point`` empty, ``rollouts_used`` zero); re-serializing
    the result reproduces the file byte for byte.
    """
    if not rows:
        raise ValueError("no rows to reconstruct a record from")
    by_iteration: dict[int, list[dict]] = {}
    for row in rows:
        by_iteration.setdefault(row["iteration"], []).append(row)
    iterations = []
    observations = []
    done = 0
    for iteration in sorted(by_iteration):
        chunk = sorted(by_iteration[iteration], key=lambda r: r["index_in_batch"])
        points = tuple(NormalizedPoint(r["nu_h"], r["nu_v"]) for r in chunk)
        evals = tuple(
            EvaluationResult(
                train_point=p,
                mean_success=r["observed_J"],
                per_test_point=(),
                rollouts_used=0,
            )
            for p, r in zip(points, chunk)
        )
        observations.extend((p, r["observed_J"]) for p, r in zip(points, chunk))
        done += len(chunk)
        iterations.append(
            IterationRecord(
                iteration=iteration,
                points=points,
                evaluations=evals,
                best_so_far=chunk[-1]["best_so_far"],
                evaluations_completed=done,
            )
        )
    return CampaignRecord(
        strategy=rows[0]["strategy"],
        seed=rows[0]["seed"],
        iterations=tuple(iterations),
        final_selection=_select_best(observations),
    )
