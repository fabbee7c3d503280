"""Command-line front end.

    klgcm run <scenario.toml | bundled-name> [--out DIR] [--threads N] [--order K] [--courant C]
    klgcm compare <a.csv> <reference.csv>
    klgcm list
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from . import elastic3d as e3
from . import shell
from .artifacts import read_snapshot, write_pgm, write_series, write_snapshot
from .gcm import CFLError
from .postprocess import ComparisonReport, ScalarField2D, extract_moments, extract_profile, nrmse, resample_like
from .scenario import COMPARABLE, Scenario, ScenarioError, bundled_names, parse_scenario

log = logging.getLogger("klgcm")

EXIT_CONFIG, EXIT_SIMULATION, EXIT_IO = 2, 3, 4


@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    code_version: str
    wall_clock: float = 0.0
    files: list[str] = field(default_factory=list)
    partial: bool = False
    error: str | None = None


class _Emitter:
    """Collects every file written during a run."""

    def __init__(self, out: Path, manifest: RunManifest):
        self.out = out
        self.manifest = manifest
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out / name
        self.manifest.files.append(name)
        return p

    def snapshot(self, name: str, f: ScalarField2D, heatmap: bool, **kw) -> None:
        write_snapshot(self.path(name + ".csv"), f, **kw)
        if heatmap:
            self.path(name + ".pgm")
            self.path(name + ".pgm.txt")
            write_pgm(self.out / (name + ".pgm"), f.values)


def _tag(t: float) -> str:
    return f"t{t * 1e3:.4f}ms"


def _sensor_specs(s: Scenario) -> list[shell.SensorSpec]:
    return [shell.SensorSpec(c.name, c.offset, c.size, c.component) for c in s.outputs.sensors]


def _shell_solver(s: Scenario, threads: int, material=None) -> shell.ShellSolver:
    n = s.numerics
    return shell.ShellSolver(material or s.material, order=n.order, courant=n.courant, limiter=n.limiter,
                             shear_convention=n.shear_convention, threads=threads)


def _solver_3d(s: Scenario, threads: int, material) -> e3.Elastic3DSolver:
    n = s.numerics
    faces = "free" if s.bc.faces == "free" else "zero_gradient"
    return e3.Elastic3DSolver(material, order=n.order, courant=n.courant, limiter=n.limiter, faces=faces, threads=threads)


def _shell_scalar(f: shell.ShellField, name: str) -> ScalarField2D:
    return ScalarField2D(f.component(name), f.dx, f.dy, f.origin, name=name, time=f.t)


def _reduce_3d(f: e3.ElasticField3D, shell_component: str) -> ScalarField2D:
    kind, what = COMPARABLE[shell_component]
    if kind == "moment":
        out = extract_moments(f, what)
    else:
        out = f.layer(what, "mid")
    out.name = shell_component
    return out


def _write_traces(em: _Emitter, prefix: str, traces) -> None:
    for name, rows in traces.items():
        write_series(em.path(f"{prefix}sensor_{name}.csv"), "t,value", rows)


def _run_shell(s: Scenario, em: _Emitter, threads: int) -> None:
    f = shell.init(s)
    run = _shell_solver(s, threads).run(f, s.t_end, s.outputs.snapshot_times, _sensor_specs(s))
    comps = s.outputs.components or ("v_x",)
    for t in s.outputs.snapshot_times:
        for c in comps:
            em.snapshot(f"shell_{c}_{_tag(t)}", _shell_scalar(run.snapshots[t], c), s.outputs.heatmaps)
    for p in s.outputs.profiles:
        st, val = extract_profile(_shell_scalar(run.snapshots[p.time], p.component), p.axis, p.band_width)
        write_series(em.path(f"shell_profile_{p.component}_{p.axis}_{_tag(p.time)}.csv"), "station,value", zip(st, val))
    _write_traces(em, "shell_", run.traces)


def _emit_3d(s: Scenario, em: _Emitter, prefix: str, run: e3.Elastic3DRun) -> None:
    comps = s.outputs.components or ("v_x",)
    for t in s.outputs.snapshot_times:
        f = run.snapshots[t]
        for c in comps:
            for where in ("mid", "top"):
                em.snapshot(f"{prefix}{c}_{where}_{_tag(t)}", f.layer(c, where), s.outputs.heatmaps)
            if s.outputs.slices:
                x, y, z = f.coords()
                xz = ScalarField2D(f.slice_xz(c), f.dx, f.dz, (x[0], z[0]), name=c, time=t)
                yz = ScalarField2D(f.slice_yz(c), f.dy, f.dz, (y[0], z[0]), name=c, time=t)
                em.snapshot(f"{prefix}{c}_xz_{_tag(t)}", xz, s.outputs.heatmaps, labels=("x", "z"), extra="plane=xz")
                em.snapshot(f"{prefix}{c}_yz_{_tag(t)}", yz, s.outputs.heatmaps, labels=("y", "z"), extra="plane=yz")
    for p in s.outputs.profiles:
        st, val = extract_profile(run.snapshots[p.time].layer(p.component, "mid"), p.axis, p.band_width)
        write_series(em.path(f"{prefix}profile_{p.component}_{p.axis}_{_tag(p.time)}.csv"), "station,value", zip(st, val))
    _write_traces(em, prefix, run.traces)


def _run_3d(s: Scenario, em: _Emitter, threads: int) -> None:
    m = s.material.with_thickness(s.geometry.thickness)
    f = e3.init_3d(s)
    run = _solver_3d(s, threads, m).run(f, s.t_end, s.outputs.snapshot_times, _sensor_specs(s))
    _emit_3d(s, em, f"3d_h{s.geometry.thickness:g}_", run)


def shell_ic_for_compare(s: Scenario, h: float) -> shell.ZeroIC | shell.PointVelocity:
    """Shell counterpart of the 3D initial condition for plate thickness ``h``.

    A through-thickness gradient ``±magnitude`` on the faces is a rotation
    rate ``2 * magnitude / h`` about the in-plane axis normal to the velocity.
    """
    ic = s.ic
    if ic.kind == "zero":
        return shell.ZeroIC()
    if ic.kind == "point":
        return shell.PointVelocity(ic.component, ic.magnitude, ic.center, ic.radius)
    component = {"v_x": "w_x", "v_y": "w_y"}[ic.component]
    return shell.PointVelocity(component, 2.0 * ic.magnitude / h, ic.center, ic.radius)


def _run_compare(s: Scenario, em: _Emitter, threads: int) -> dict[str, ComparisonReport]:
    g = s.geometry
    comps = s.outputs.components or ("v_x",)
    times = [t for t in s.outputs.snapshot_times]
    reports: dict[str, dict[float, ComparisonReport]] = {c: {} for c in comps}
    for h, nz in zip(g.thicknesses, g.nz_list):
        m = s.material.with_thickness(h)
        log.info("compare: h=%g nz=%d", h, nz)
        sf = shell.init_field(g.nx, g.ny, g.extent_x, g.extent_y, shell_ic_for_compare(s, h))
        srun = _shell_solver(s, threads, m).run(sf, s.t_end, times, _sensor_specs(s))
        f3 = e3.init_3d(s, thickness=h, nz=nz)
        run3 = _solver_3d(s, threads, m).run(f3, s.t_end, times, _sensor_specs(s), reducer=_reduce_3d)
        tag = f"h{h:g}_"
        for c in comps:
            rep = reports[c][h] = ComparisonReport(c, reference="elastic3d", alignment="3D mid-plane resampled onto shell grid")
            for t in times:
                a = _shell_scalar(srun.snapshots[t], c)
                b = resample_like(_reduce_3d(run3.snapshots[t], c), a)
                em.snapshot(f"compare_{tag}shell_{c}_{_tag(t)}", a, s.outputs.heatmaps)
                em.snapshot(f"compare_{tag}3d_{c}_{_tag(t)}", b, s.outputs.heatmaps)
                if b.values.max() > b.values.min():
                    rep.add(t, nrmse(a, b))
        for p in s.outputs.profiles:
            for label, fld in (("shell", _shell_scalar(srun.snapshots[p.time], p.component)),
                               ("3d", _reduce_3d(run3.snapshots[p.time], p.component))):
                st, val = extract_profile(fld, p.axis, p.band_width)
                write_series(em.path(f"compare_{tag}{label}_profile_{p.component}_{p.axis}_{_tag(p.time)}.csv"),
                             "station,value", zip(st, val))
        _write_traces(em, f"compare_{tag}shell_", srun.traces)
        _write_traces(em, f"compare_{tag}3d_", run3.traces)
    for c, by_h in reports.items():
        hs = list(by_h)
        all_t = sorted({t for r in by_h.values() for t in r.times})
        rows = [[t] + [dict(zip(by_h[h].times, by_h[h].values)).get(t, float("nan")) for h in hs] for t in all_t]
        write_series(em.path(f"nrmse_{c}.csv"), "t," + ",".join(f"h={h:g}" for h in hs), rows)
    return {f"{c}@h={h:g}": r for c, by_h in reports.items() for h, r in by_h.items()}


def run_scenario(s: Scenario, out: Path | str = "out", threads: int = 1) -> RunManifest:
    """Execute a scenario, write its artifacts and ``manifest.json`` into ``out``."""
    out = Path(out)
    manifest = RunManifest(s.name, s.digest, __version__)
    em = _Emitter(out, manifest)
    start = time.perf_counter()
    try:
        if s.solver == "shell":
            _run_shell(s, em, threads)
        elif s.solver == "elastic3d":
            _run_3d(s, em, threads)
        else:
            _run_compare(s, em, threads)
    except Exception as exc:
        manifest.partial = True
        manifest.error = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        manifest.wall_clock = time.perf_counter() - start
        manifest.files = sorted(set(manifest.files) | {"manifest.json"})
        (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n")
    return manifest


def _fail(category: str, message: str, code: int) -> int:
    print(f"error category={category} message={message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="klgcm", description="Kirchhoff-Love shell and 3D elasticity wave solvers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file or bundled scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--order", type=int)
    p_run.add_argument("--courant", type=float)

    p_cmp = sub.add_parser("compare", help="NRMSE of a snapshot CSV against a reference snapshot CSV")
    p_cmp.add_argument("snapshot")
    p_cmp.add_argument("reference")

    sub.add_parser("list", help="list bundled scenarios")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "list":
        print("\n".join(bundled_names()))
        return 0

    if args.command == "compare":
        try:
            a, b = read_snapshot(Path(args.snapshot)), read_snapshot(Path(args.reference))
            print(repr(nrmse(resample_like(a, b), b)))
        except (OSError, ValueError) as exc:
            return _fail("io", str(exc), EXIT_IO)
        except ZeroDivisionError as exc:
            return _fail("metric", str(exc), EXIT_SIMULATION)
        return 0

    try:
        s = parse_scenario(args.scenario).with_numerics(order=args.order, courant=args.courant)
    except FileNotFoundError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except ScenarioError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    if args.threads < 1:
        return _fail("config", "--threads must be at least 1", EXIT_CONFIG)
    try:
        manifest = run_scenario(s, args.out, args.threads)
    except (CFLError, shell.SimulationError) as exc:
        return _fail("simulation", f"{s.name}: {exc}", EXIT_SIMULATION)
    except ValueError as exc:
        return _fail("config", f"{s.name}: {exc}", EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    print(f"{s.name}: {len(manifest.files)} files in {args.out} ({manifest.wall_clock:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
