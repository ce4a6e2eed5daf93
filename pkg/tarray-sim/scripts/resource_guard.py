#!/usr/bin/env python3
"""
Resource preflight for simulations.

Estimates cell count and field memory for a grid and raises alerts against
the configured cell budget (TARRAY_CELL_BUDGET). Run directly to check a
preset before launching it:

    python scripts/resource_guard.py paper-3x3 0.15
"""

import math
import os
import sys

from errors import ResourceError

DEFAULT_CELL_BUDGET = 20_000_000

# Six field components plus six E-update coefficient arrays, float64
BYTES_PER_CELL = 12 * 8


def cell_budget(override=None):
    if override is not None:
        return int(override)
    return int(float(os.getenv("TARRAY_CELL_BUDGET", DEFAULT_CELL_BUDGET)))


def estimate(n_cells, budget=None):
    """Utilization of the budget with INFO/WARNING/CRITICAL alerts."""
    budget = cell_budget(budget)
    utilization = 100.0 * n_cells / budget
    alerts = []
    if utilization > 100:
        alerts.append({
            "level": "CRITICAL",
            "message": f"Grid of {n_cells:,} cells exceeds the budget of {budget:,}",
            "action": "Use a coarser cell, a smaller air margin, or raise TARRAY_CELL_BUDGET",
        })
    elif utilization >= 80:
        alerts.append({
            "level": "WARNING",
            "message": f"Grid uses {utilization:.1f}% of the cell budget",
            "action": "Expect long runtimes and high memory use",
        })
    elif utilization >= 50:
        alerts.append({
            "level": "INFO",
            "message": f"Grid uses {utilization:.1f}% of the cell budget",
            "action": "Continue",
        })
    return {
        "cells": n_cells,
        "budget": budget,
        "utilization": utilization,
        "memory_mb": n_cells * BYTES_PER_CELL / 1e6,
        "alerts": alerts,
    }


def check_cell_budget(n_cells, budget=None):
    report = estimate(n_cells, budget)
    critical = [a for a in report["alerts"] if a["level"] == "CRITICAL"]
    if critical:
        raise ResourceError(f"{critical[0]['message']}. {critical[0]['action']}.")
    return report


def preflight(scene, settings):
    """
    Cell-count estimate from the scene's bounding box, before anything is
    allocated. Raises ResourceError when the budget would be exceeded.
    """
    lo, hi = scene.bounding_box()
    margin = 0.0 if scene.domain_mm is not None else settings.air_margin_mm
    pml = 0 if scene.boundary == "pec" else settings.pml_cells
    steps = (settings.cell_mm, settings.cell_mm, settings.cell_z_mm or settings.cell_mm)
    n_cells = 1
    for axis in range(3):
        span = hi[axis] - lo[axis] + 2.0 * margin
        n_cells *= max(1, math.ceil(span / steps[axis] - 1e-9)) + 2 * pml
    return check_cell_budget(n_cells, settings.cell_budget)


def print_alerts(report):
    if not report["alerts"]:
        return
    print("📢 Resource Alerts:")
    for alert in report["alerts"]:
        print(f"  {alert['level']}: {alert['message']}")
        print(f"  Action: {alert['action']}")


if __name__ == "__main__":
    from material_grid import voxelize
    from presets import build_preset

    preset = sys.argv[1] if len(sys.argv) > 1 else "paper-3x3"
    cell = float(sys.argv[2]) if len(sys.argv) > 2 else 0.15
    scene = build_preset(preset)
    try:
        grid = voxelize(scene, cell, margin_mm=4.0, cell_budget=10**12)
    except ResourceError as e:
        print(f"❌ {e}")
        sys.exit(1)
    report = estimate(grid.n_cells)
    print_alerts(report)
    print(f"🧮 {preset} at {cell} mm: {grid.nx} x {grid.ny} x {grid.nz} = {grid.n_cells:,} cells, "
          f"~{report['memory_mb']:.0f} MB of field storage")

    if any(a["level"] == "CRITICAL" for a in report["alerts"]):
        sys.exit(1)
    elif any(a["level"] == "WARNING" for a in report["alerts"]):
        sys.exit(2)
    else:
        sys.exit(0)
