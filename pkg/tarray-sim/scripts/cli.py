#!/usr/bin/env python3
"""
Command-line entry point for T-Array Sim.

    python scripts/cli.py design --fr-ghz 6 --er 2.2 --h-mm 0.766
    python scripts/cli.py geometry --preset paper-3x3 --output scene.json
    python scripts/cli.py simulate --preset cavity-te101 --cell-mm 0.5
    python scripts/cli.py analyze --run runs/cavity-te101
    python scripts/cli.py sweep --preset paper-3x3 --parameter g --values 1.59 2.2
    python scripts/cli.py ledger
"""

import argparse
import sys
import time
import traceback
from pathlib import Path

from dotenv import load_dotenv

from design_calc import SubstrateSpec, design_patch
from errors import GeometryPreconditionError, MissingRunFilesError, TArrayError
from material_grid import voxelize
from pipeline import DEFAULT_OUTPUT_ROOT, AntennaPipeline, RunConfig, load_scene, run_sweep, sweep_values
from presets import PRESETS
from run_ledger import RunLedger, default_db_path

EPILOG = """environment variables (also read from .env):
  TARRAY_THREADS         worker budget for solver slabs and sweep points (default 1)
  TARRAY_CELL_BUDGET     largest grid, in cells, a run may allocate (default 20000000)
  TARRAY_LEDGER_DB       sqlite ledger path (default runs/tarray_runs.db)
  TARRAY_PROGRESS_EVERY  steps between progress lines, 0 for none (default 500)

exit codes: 0 ok, 2 design, 3 geometry, 4 solver, 5 analysis, 1 anything else
"""


def _steps(value):
    if value == "auto":
        return value
    steps = int(value)
    if steps < 0:
        raise argparse.ArgumentTypeError("steps must be >= 0 or 'auto'")
    return steps


def _assignment(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got '{text}'")
    key, value = text.split("=", 1)
    return key.strip(), float(value)


def _add_scene_flags(parser):
    # SUPPRESS keeps unset flags out of the namespace so config-file values survive
    s = argparse.SUPPRESS
    parser.add_argument("--config", help="JSON file with any of these flags as keys")
    parser.add_argument("--preset", choices=sorted(PRESETS), default=s)
    parser.add_argument("--scene", default=s, help="scene JSON written by the geometry command")
    parser.add_argument("--rotation-deg", type=float, default=s, help="element rotation angle (default 90)")
    parser.add_argument("--gap-mm", type=float, default=s, help="array gap between elements (default 2.2)")
    parser.add_argument("--set", dest="assignments", type=_assignment, action="append", default=s,
                        metavar="KEY=VALUE", help="override a design parameter, e.g. --set t_l=2.0")


def _add_run_flags(parser):
    s = argparse.SUPPRESS
    parser.add_argument("--cell-mm", type=float, default=s)
    parser.add_argument("--cell-z-mm", type=float, default=s)
    parser.add_argument("--fmin-ghz", type=float, default=s, help="lower edge of the source band (default 4)")
    parser.add_argument("--fmax-ghz", type=float, default=s, help="upper edge of the source band (default 16)")
    parser.add_argument("--steps", type=_steps, default=s, help="step count or 'auto' (default auto)")
    parser.add_argument("--max-steps", type=int, default=s)
    parser.add_argument("--pml-cells", type=int, default=s)
    parser.add_argument("--air-margin-mm", type=float, default=s)
    parser.add_argument("--frequencies-ghz", type=float, nargs="+", default=s,
                        help="far-field frequencies recorded on the Huygens box")
    parser.add_argument("--workers", type=int, default=s)
    parser.add_argument("--output", default=s, help="run directory")
    parser.add_argument("--threshold-db", type=float, default=s)
    parser.add_argument("--compare-published", action="store_true", default=s)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tarray", description="Double-T microstrip array design, FDTD simulation and analysis",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="closed-form patch design")
    p.add_argument("--fr-ghz", type=float, required=True)
    p.add_argument("--er", type=float, default=2.2)
    p.add_argument("--h-mm", type=float, default=None, help="substrate height; derived from f_r when omitted")
    p.add_argument("--tan-d", type=float, default=0.0)
    p.add_argument("--both-edges", action="store_true", help="subtract one extension per radiating edge")
    p.add_argument("--output", default=None)

    p = sub.add_parser("geometry", help="build a scene")
    _add_scene_flags(p)
    p.add_argument("--output", default=None, help="scene JSON path (stdout when omitted)")
    p.add_argument("--stl", default=None, help="also voxelize and write the metal as STL")
    p.add_argument("--cell-mm", type=float, default=0.1, help="cell size for --stl")

    p = sub.add_parser("simulate", help="run the FDTD solver")
    _add_scene_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("analyze", help="S11, bands, far fields and metrics of a run")
    p.add_argument("--config")
    p.add_argument("--run", dest="output", default=argparse.SUPPRESS, help="run directory")
    p.add_argument("--preset", default=argparse.SUPPRESS, help="preset used for the published comparison")
    p.add_argument("--threshold-db", type=float, default=argparse.SUPPRESS)
    p.add_argument("--compare-published", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("sweep", help="vary one design parameter, one run per value")
    _add_scene_flags(p)
    _add_run_flags(p)
    p.add_argument("--parameter", help="design parameter symbol (g, t_l, L, ...) or 'preset'")
    p.add_argument("--values", nargs="+")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("ledger", help="recent runs")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--command-filter", dest="filter", default=None)
    return parser


def resolve_config(args):
    flags = dict(vars(args))
    overrides = dict(flags.pop("assignments", []))
    for flag, key in (("rotation_deg", "rotation_deg"), ("gap_mm", "gap_mm")):
        if flag in flags:
            overrides[key] = flags.pop(flag)
    if overrides:
        flags["overrides"] = overrides
    config_path = flags.pop("config", None)
    if config_path:
        return RunConfig.from_file(config_path, flags)
    return RunConfig.resolve({}, flags)


# -- commands ------------------------------------------------------------------

def cmd_design(args):
    substrate = SubstrateSpec(args.er, args.tan_d, args.h_mm if args.h_mm is not None else 1.0)
    design = design_patch(args.fr_ghz * 1e9, substrate, h_override=args.h_mm, both_edges=args.both_edges)
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(design.to_json() + "\n", encoding="utf-8")
        print(f"📁 Design written to {path}")
    else:
        print(design.to_json())
    return {"patch_width_mm": design.patch_width_mm, "patch_length_mm": design.patch_length_mm}


def cmd_geometry(args):
    config = resolve_config(args)
    scene = load_scene(config)
    dims = scene.overall_dimensions_mm()
    if args.output:
        path = scene.save(args.output)
        bbox = scene.metal_bounding_box()
        print(f"✅ {scene.name}: {dims['length_mm']:.3f} x {dims['width_mm']:.3f} x {dims['thickness_mm']:.3f} mm")
        if bbox:
            print(f"   Metal: {bbox[2] - bbox[0]:.3f} mm wide, top-layer area {scene.conductor_area('top'):.3f} mm²")
        print(f"📁 Scene written to {path}")
    else:
        print(scene.to_json())
    if args.stl:
        grid = voxelize(scene, args.cell_mm)
        grid.write_stl(args.stl, name=scene.name)
        print(f"📁 STL written to {args.stl}")
    return dims


def cmd_simulate(args):
    config = resolve_config(args)
    directory, output = AntennaPipeline(config).simulate()
    args.output_dir = str(directory)
    return {"n_steps": output.n_steps, "decayed": output.decayed}


def cmd_analyze(args):
    config = resolve_config(args)
    if not config.output:
        raise MissingRunFilesError("analyze needs --run <directory>")
    metrics = AntennaPipeline(config).analyze(config.output, preset=config.preset)
    return {"n_bands": len(metrics.bands), "aggregate_bandwidth_hz": metrics.aggregate_bandwidth_hz,
            "min_s11_db": metrics.min_s11_db, "peak_gain_dbi": metrics.peak_gain_dbi}


def cmd_sweep(args):
    config = resolve_config(args)
    plan = dict(config.sweep or {})
    for key in ("parameter", "values", "start", "stop", "points"):
        if getattr(args, key, None) is not None:
            plan[key] = getattr(args, key)
    parameter = plan.get("parameter")
    if not parameter:
        raise GeometryPreconditionError("sweep needs --parameter")
    values = sweep_values(plan.get("values"), plan.get("start"), plan.get("stop"), plan.get("points"))
    print("=" * 60)
    print(f"🚀 Sweep {parameter}: {', '.join(map(str, values))}")
    print("=" * 60)
    table = run_sweep(config, parameter, values, workers=config.workers)
    print(table.to_string(index=False))
    return {"points": len(table), "failed": int((table["status"] == "failed").sum())}


def cmd_ledger(args):
    ledger = RunLedger(default_db_path(DEFAULT_OUTPUT_ROOT))
    table = ledger.recent(args.limit, args.filter)
    if table.empty:
        print("📋 No runs recorded yet")
    else:
        print(table.to_string(index=False))
    print(f"📊 {ledger.get_stats()}")
    return None


COMMANDS = {
    "design": cmd_design,
    "geometry": cmd_geometry,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "ledger": cmd_ledger,
}


def _target(args):
    if args.command == "design":
        return f"{args.fr_ghz:g} GHz"
    return getattr(args, "preset", None) or getattr(args, "scene", None) or getattr(args, "output", None)


def _open_ledger(args):
    if args.command == "ledger":
        return None, None
    try:
        ledger = RunLedger(default_db_path(DEFAULT_OUTPUT_ROOT))
        return ledger, ledger.start(args.command, _target(args), getattr(args, "output", None))
    except Exception as e:
        print(f"⚠️  Run ledger unavailable: {e}")
        return None, None


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    ledger, run_id = _open_ledger(args)
    started = time.time()
    status, code, metrics, message = "ok", 0, None, None
    try:
        metrics = COMMANDS[args.command](args)
    except TArrayError as e:
        status, code, message = "failed", e.exit_code, str(e)
        print(f"❌ {e}")
    except FileNotFoundError as e:
        status, code, message = "failed", 1, str(e)
        print(f"❌ {e}")
    except Exception as e:
        status, code, message = "failed", 1, str(e)
        traceback.print_exc()
    if ledger is not None:
        try:
            ledger.finish(run_id, status, time.time() - started, metrics, message)
        except Exception as e:
            print(f"⚠️  Could not update the run ledger: {e}")
    return code


if __name__ == "__main__":
    sys.exit(main())
