"""
Tightness sweeps over a family's eps sequence.

One cell is one family instance (one eps); its theorems run in sequence and
cells run concurrently.  Aggregation happens after every cell has finished,
in eps order, so the outputs do not depend on the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from specfact.circle import CircleGrid
from specfact.errors import SpecfactError
from specfact.families import (
    Example1Params,
    ScalarFamily,
    ScalarFamilyParams,
    example1_lower_bound_check,
    example1_pair,
    example2_check,
    gamma_divergence_check,
    loglog_fit,
    onset_eps,
)
from specfact.verify import verify_pair, verify_scalar_pair
from utils.serialization import FLOAT_FORMAT, save_json

logger = logging.getLogger(__name__)

# thm1.4 needs ||G - F||_1 <= e^-4; the exponent fit uses those cells only
BAND_MAX_DISTANCE = np.exp(-4.0)
BAND_SLACK = 0.05


@dataclass
class CellResult:
    eps: float
    reports: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    family: str
    cells: list
    summary: dict

    @property
    def reports(self):
        return [report for cell in self.cells for report in cell.reports]

    @property
    def has_violation(self):
        return any(report.violation for report in self.reports)

    @property
    def has_errors(self):
        divergence = self.summary.get("gamma_divergence") or {}
        return any(cell.errors for cell in self.cells) or "error" in divergence

    @property
    def failed_checks(self):
        """Names of the family-level checks that ran and did not hold."""
        failed = []
        band = self.summary.get("exponent_band")
        if band and band["within"] is False:
            failed.append("exponent_band")
        divergence = self.summary.get("gamma_divergence") or {}
        if "holds" in divergence and not divergence["holds"]:
            failed.append(f"gamma_{divergence['expectation']}")
        return failed

    @property
    def failed(self):
        return self.has_violation or self.has_errors or bool(self.failed_checks)

    def frame(self):
        rows = [report.to_row() for report in self.reports]
        for cell in self.cells:
            for theorem, message in cell.errors.items():
                rows.append(
                    {
                        "theorem": theorem,
                        "label": self.family,
                        "eps": cell.eps,
                        "error": message,
                    }
                )
        return pd.DataFrame(rows)


def _grid(config):
    return CircleGrid(config.grid_size) if config.grid_size else None


def _run_matrix_cell(config, eps):
    params = Example1Params(**config.params, eps=eps, variant=config.family)
    grid = _grid(config)
    cell = CellResult(eps=eps)
    if config.family == "ex1":
        check = example1_lower_bound_check(params, grid)
    else:
        _, check = example2_check(params, grid)
    cell.checks, cell.values = check["checks"], check["values"]

    pair = example1_pair(params, grid)
    for theorem in config.theorems:
        try:
            cell.reports.append(
                verify_pair(
                    pair,
                    theorem,
                    config.verification,
                    config.factorization,
                    rebuild=lambda doubled: example1_pair(params, doubled),
                    grid_settings=config.grid,
                )
            )
        except SpecfactError as e:
            logger.warning("%s at eps=%g: %s", theorem, eps, e)
            cell.errors[theorem] = str(e)
    return cell


def _run_scalar_cell(config, eps):
    params = ScalarFamilyParams(**config.params, eps=eps)
    family = ScalarFamily(params)
    cell = CellResult(eps=eps)
    try:
        lhs = family.lhs(config.quadrature)
        statistics = family.statistics(config.quadrature)
    except SpecfactError as e:
        cell.errors["quadrature"] = str(e)
        return cell
    left, right = family.interval()
    inside = np.linspace(left, right, 257)
    cell.values = {
        "lhs": lhs,
        "d1": statistics.d1,
        "dlog": statistics.dlogdet,
        "interval_length": right - left,
    }
    half_phase = family.h_tilde(inside) / 2
    cell.checks = {
        "cos_nonpositive_on_interval": bool(np.all(np.cos(half_phase) <= 1e-12))
    }
    verification = config.verification.model_copy(update={"p0": params.p})
    for theorem in config.theorems:
        try:
            cell.reports.append(
                verify_scalar_pair(
                    None,
                    None,
                    theorem,
                    verification,
                    lhs=lhs,
                    statistics=statistics,
                    label="scalar6",
                    params={"eps": eps, **params.model_dump()},
                )
            )
        except SpecfactError as e:
            cell.errors[theorem] = str(e)
    return cell


def run_cell(config, eps):
    """Run every check and theorem of ``config`` at one eps."""
    logger.info("sweep cell %s eps=%g", config.family, eps)
    if config.family == "scalar6":
        return _run_scalar_cell(config, eps)
    return _run_matrix_cell(config, eps)


def _decade_table(reports):
    table = {}
    for report in reports:
        eps = report.params.get("eps")
        if not eps or not np.isfinite(report.ratio):
            continue
        key = f"{report.theorem}:1e{int(np.floor(np.log10(eps)))}"
        low, high = table.get(key, (np.inf, -np.inf))
        table[key] = (min(low, report.ratio), max(high, report.ratio))
    return {
        key: {"min_ratio": low, "max_ratio": high}
        for key, (low, high) in sorted(table.items())
    }


def exponent_band_check(cells, p1):
    """
    Log-log exponent of lhs against ||G - F||_1 for the second family, checked
    against [p1/(p1+1) - 0.05, 2 p1/(2 p1+1) + 0.05].

    Cells with ||G - F||_1 > e^-4 are left out of the fit. ``within`` is None
    when fewer than two cells remain.
    """
    low = p1 / (p1 + 1) - BAND_SLACK
    high = 2 * p1 / (2 * p1 + 1) + BAND_SLACK
    kept = [
        cell
        for cell in cells
        if 0 < cell.values.get("d1", np.nan) <= BAND_MAX_DISTANCE
    ]
    fit = loglog_fit(
        [cell.values["d1"] for cell in kept],
        [cell.values.get("lhs_explicit", np.nan) for cell in kept],
    )
    slope = fit["slope"] if fit else None
    return {
        "low": low,
        "high": high,
        "eps": [cell.eps for cell in kept],
        "slope": slope,
        "within": None if fit is None else bool(low <= slope <= high),
    }


def summarize(config, cells):
    eps_values = [cell.eps for cell in cells]
    check_names = sorted({name for cell in cells for name in cell.checks})
    onsets = {
        name: onset_eps(eps_values, [cell.checks.get(name, False) for cell in cells])
        for name in check_names
    }
    reports = [report for cell in cells for report in cell.reports]
    fits = {}
    for theorem in config.theorems:
        selected = [report for report in reports if report.theorem == theorem]
        fits[theorem] = {
            "lhs_vs_d1": loglog_fit(
                [r.statistics.d1 for r in selected], [r.lhs for r in selected]
            ),
            "ratio_vs_eps": loglog_fit(
                [r.params.get("eps", np.nan) for r in selected],
                [r.ratio for r in selected],
            ),
        }
    lhs_key = "lhs" if config.family == "scalar6" else "lhs_explicit"
    fits["family"] = {
        "lhs_vs_d1": loglog_fit(
            [cell.values.get("d1", np.nan) for cell in cells],
            [cell.values.get(lhs_key, np.nan) for cell in cells],
        )
    }
    summary = {
        "family": config.family,
        "eps": eps_values,
        "checks": {str(cell.eps): cell.checks for cell in cells},
        "values": {str(cell.eps): cell.values for cell in cells},
        "errors": {str(cell.eps): cell.errors for cell in cells if cell.errors},
        "onset_eps": onsets,
        "decades": _decade_table(reports),
        "fits": fits,
        "violations": sum(report.violation for report in reports),
    }
    if config.family == "ex2":
        summary["exponent_band"] = exponent_band_check(
            cells, config.params.get("p1", 2.0)
        )
    return summary


def sweep(config, jobs=1):
    """
    Run a FamilyConfig over its eps sequence.

    Args:
        config: FamilyConfig
        jobs: worker threads

    Returns:
        SweepResult (empty when the eps list is empty)
    """
    eps_values = sorted(config.eps, reverse=True)
    if not eps_values:
        return SweepResult(
            family=config.family, cells=[], summary=summarize(config, [])
        )
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(run_cell, config, eps) for eps in eps_values]
        cells = [future.result() for future in futures]
    summary = summarize(config, cells)
    if config.family == "scalar6" and len(eps_values) >= 2:
        params = ScalarFamilyParams(**config.params, eps=eps_values[0])
        try:
            summary["gamma_divergence"] = gamma_divergence_check(
                params, eps_values, config.quadrature
            )
        except SpecfactError as e:
            summary["gamma_divergence"] = {"error": str(e)}
    return SweepResult(family=config.family, cells=cells, summary=summary)


def write_sweep(result, out_dir, run_config: Optional[dict] = None):
    """Write ``<family>.csv`` and ``summary.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{result.family}.csv"
    result.frame().to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
    save_json(
        out_dir / "summary.json", {**result.summary, "run_config": run_config or {}}
    )
    logger.info("sweep outputs written to %s", out_dir)
    return csv_path
