"""``csq`` command line: run one scenario from a config file and write CSV/JSON, a manifest and figures.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 regime violation under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .config import BACKENDS, FORMATS, FRAMES, SCENARIOS, ScenarioConfig, load
from .dynamics import lindblad_spec
from .errors import ConfigError, CSqueezeError
from .gates import SqueezeParams, squeeze
from .hilbert import QuantumState, fock, resonator_layout, wigner_grid
from .model import derive, validate_regimes
from .protocol import (
    BlochPoint,
    ProtocolReport,
    SweepSummary,
    bloch_grid,
    bloch_sweep,
    chi_states,
    compensated_encode,
    optimize_compensation_angle,
)
from .squid import extract_model_params, mode_frequencies, mode_spectrum

SWEEP_COLUMNS = ("theta_b", "phi_b", "p_plus", "p_minus", "f_plus", "f_minus", "f_avg", "purity_plus", "purity_minus", "phi_used")
MODE_COLUMNS = ("index", "wavenumber", "omega", "domega_dphase", "residual")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_REGIME = 0, 2, 3, 4


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def write_json(path: Path, obj) -> Path:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def _spec(cfg: ScenarioConfig):
    if cfg.backend != "lindblad":
        return None
    return lindblad_spec(cfg.params, cfg.dephasing_factor)


def branch_state(joint: QuantumState, outcome: int) -> QuantumState:
    """Normalised resonator state after measuring the qubit in ``|outcome>``."""
    n = joint.layout.resonator_dim
    rho = joint.density_matrix()[outcome * n:(outcome + 1) * n, outcome * n:(outcome + 1) * n]
    rho = 0.5 * (rho + rho.conj().T)
    p = np.trace(rho).real
    if p <= 1e-14:
        raise CSqueezeError(f"measurement outcome {outcome} has zero probability")
    return QuantumState(resonator_layout(n), rho / p)


class _Run:
    """What a scenario produced: JSON payload, optional table and a figure callback."""

    def __init__(self, payload: dict, table=None, figure=None, error: str = ""):
        self.payload = payload
        self.table = table
        self.figure = figure
        self.error = error


def _encode(cfg: ScenarioConfig, point: BlochPoint):
    return compensated_encode(point, cfg.params, cfg.phi_star, cfg.backend, cfg.frame, _spec(cfg), cfg.tol)


def run_simulate(cfg: ScenarioConfig) -> _Run:
    res = _encode(cfg, cfg.point)
    rep = res.report

    def figure(path):
        ext = cfg.wigner["extent"]
        xs = np.linspace(-ext, ext, 101)
        grids = {}
        for q, name in ((0, "outcome +"), (1, "outcome -")):
            p = rep.p_plus if q == 0 else rep.p_minus
            if p > 1e-12:
                grids[name] = wigner_grid(branch_state(res.joint_state, q), xs, xs)
        return plotting.wigner_pair_figure(xs, xs, grids, path)

    return _Run({"report": rep.as_dict()}, (SWEEP_COLUMNS, [rep.row()]), figure)


def run_sweep(cfg: ScenarioConfig) -> _Run:
    grid = bloch_grid(cfg.sweep_theta, cfg.sweep_phi)
    reports = bloch_sweep(cfg.params, grid, cfg.phi_star, cfg.backend, cfg.frame, cfg.jobs, _spec(cfg))
    rows = [r.row() for r in reports]
    failed = [r for r in reports if r.failed]
    error = ""
    if failed:
        error = "; ".join(f"({r.bloch.theta_b:.6g}, {r.bloch.phi_b:.6g}): {r.error}" for r in failed)
    good = [r.row() for r in reports if not r.failed]

    def figure(path):
        return plotting.sweep_figure(good, path) if good else None

    payload = {"reports": [r.as_dict() for r in reports], "summary": _latitude_summary(reports)}
    return _Run(payload, (SWEEP_COLUMNS, rows), figure, error)


def _latitude_summary(reports: list[ProtocolReport]) -> list[dict]:
    table = SweepSummary(list(reports)).by_latitude()
    return [{"theta_b": k, **v} for k, v in sorted(table.items())]


def run_optimize(cfg: ScenarioConfig) -> _Run:
    opt = optimize_compensation_angle(
        cfg.params, cfg.backend, cfg.point, cfg.frame, cfg.grid_points, spec=_spec(cfg)
    )
    rows = [{"phi": p, "f_avg": f} for p, f in opt.landscape]

    def figure(path):
        return plotting.landscape_figure(opt.landscape, opt.phi_analytic, opt.phi_star, path) if opt.landscape else None

    payload = opt.as_dict()
    payload["probe"] = {"theta_b": cfg.point.theta_b, "phi_b": cfg.point.phi_b}
    return _Run(payload, (("phi", "f_avg"), rows), figure)


def run_modes(cfg: ScenarioConfig) -> _Run:
    geo = cfg.geometry
    spec = mode_spectrum(geo, count=cfg.modes, with_coupling=cfg.modes >= 2)
    drive = {"epsilon": cfg.params.epsilon, "theta": cfg.params.theta}
    extracted = extract_model_params(geo, drive=drive, advisory_modes=max(cfg.modes, 2))
    rows = [
        {
            "index": i,
            "wavenumber": float(spec.wavenumbers[i]),
            "omega": float(spec.frequencies[i]),
            "domega_dphase": float(spec.flux_derivatives[i]),
            "residual": float(spec.residuals[i]),
        }
        for i in range(cfg.modes)
    ]
    payload = {
        "geometry": {k: getattr(geo, k) for k in ("l0", "c0", "d", "cj", "ej", "flux_bias")},
        "spectrum": spec.as_dict(),
        "extracted": extracted.as_dict(),
    }

    def figure(path):
        # stay on the stable branch cos(phase) > 0
        phases = np.linspace(-1.4, 1.4, 57)
        freqs = np.array([mode_frequencies(geo, ph, cfg.modes) for ph in phases])
        return plotting.modes_figure(phases, freqs, geo.flux_bias, path)

    return _Run(payload, (MODE_COLUMNS, rows), figure)


def wigner_state(cfg: ScenarioConfig) -> QuantumState:
    w = cfg.wigner
    dim = cfg.params.resonator_dim
    kind = w["state"]
    if kind == "vacuum":
        return fock(dim, 0)
    if kind == "fock":
        return fock(dim, w["fock_n"])
    r = derive(cfg.params).r_target
    theta = cfg.params.theta
    if kind == "squeezed":
        vec = squeeze(SqueezeParams(r, theta), dim).data @ fock(dim, 0).data
        return QuantumState(resonator_layout(dim), vec / np.linalg.norm(vec))
    if kind in ("code_plus", "code_minus"):
        code = chi_states(r, theta, dim)
        return code.chi_plus if kind == "code_plus" else code.chi_minus
    res = _encode(cfg, BlochPoint(w["theta_b"], w["phi_b"]))
    return branch_state(res.joint_state, 0 if kind == "branch_plus" else 1)


def run_wigner(cfg: ScenarioConfig) -> _Run:
    state = wigner_state(cfg)
    ext, n = cfg.wigner["extent"], cfg.wigner["points"]
    xs = np.linspace(-ext, ext, n)
    w = wigner_grid(state, xs, xs)
    i, j = np.unravel_index(int(np.argmax(w)), w.shape)
    payload = {
        "state": cfg.wigner["state"],
        "xs": xs,
        "ps": xs,
        "w": w,
        "w_max": float(w[i, j]),
        "w_min": float(w.min()),
        "argmax": {"x": float(xs[j]), "p": float(xs[i])},
        "integral": float(w.sum() * (xs[1] - xs[0]) ** 2),
    }
    rows = [{"x": xs[jj], "p": xs[ii], "w": w[ii, jj]} for ii in range(n) for jj in range(n)]

    def figure(path):
        return plotting.wigner_figure(xs, xs, w, path, title=cfg.wigner["state"])

    return _Run(payload, (("x", "p", "w"), rows), figure)


RUNNERS = {
    "simulate": run_simulate,
    "sweep": run_sweep,
    "optimize-phi": run_optimize,
    "modes": run_modes,
    "wigner": run_wigner,
}


def output_stem(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.out_path)
    if out.suffix in (".csv", ".json"):
        out = out.with_suffix("")
    return out


def run(cfg: ScenarioConfig, strict: bool = False, stderr=None) -> int:
    """Execute a validated scenario; returns the process exit code."""
    stderr = stderr or sys.stderr
    start = time.perf_counter()
    stem = output_stem(cfg)
    stem.parent.mkdir(parents=True, exist_ok=True)
    regimes = [c.as_dict() for c in validate_regimes(cfg.params)]
    violated = [c for c in regimes if not c["passed"]]
    manifest = {
        "scenario": cfg.scenario,
        "config": cfg.echo(),
        "derived": derive(cfg.params).as_dict(),
        "regimes": regimes,
        "version": __version__,
        "outputs": [],
        "status": "ok",
        "error": "",
    }
    manifest_path = stem.parent / (stem.name + ".manifest.json")

    def finish(code: int) -> int:
        manifest["wall_time_s"] = time.perf_counter() - start
        write_json(manifest_path, manifest)
        return code

    if violated:
        names = ", ".join(c["check"] for c in violated)
        if strict:
            manifest["status"] = "regime_violation"
            manifest["error"] = f"regime checks failed: {names}"
            print(f"csq: regime violation: {names}", file=stderr)
            return finish(EXIT_REGIME)
        print(f"csq: warning: regime checks failed: {names}", file=stderr)

    try:
        result = RUNNERS[cfg.scenario](cfg)
    except CSqueezeError as exc:
        manifest["status"] = "numeric_failure"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        print(f"csq: {type(exc).__name__}: {exc}", file=stderr)
        return finish(EXIT_NUMERIC)

    data_path = stem.parent / f"{stem.name}.{cfg.out_format}"
    if cfg.out_format == "csv":
        write_csv(data_path, *result.table)
    else:
        write_json(data_path, result.payload)
    manifest["outputs"].append(data_path.name)
    if cfg.figures and result.figure is not None:
        fig = result.figure(stem.parent / f"{stem.name}.png")
        if fig is not None:
            manifest["outputs"].append(Path(fig).name)
    if result.error:
        manifest["status"] = "numeric_failure"
        manifest["error"] = result.error
        print(f"csq: {result.error}", file=stderr)
        return finish(EXIT_NUMERIC)
    return finish(EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csq", description="Controlled-squeeze encoding simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", help="INI config file or a previous run manifest (.json)")
        p.add_argument("--jobs", type=int, help="worker threads for sweeps")
        p.add_argument("--out", help="output path; the extension is replaced by the format")
        p.add_argument("--format", choices=FORMATS, help="data file format")
        p.add_argument("--backend", choices=BACKENDS)
        p.add_argument("--frame", choices=FRAMES)
        p.add_argument("--phi-star", help="compensation angle [rad] or 'analytic'")
        p.add_argument("--strict", action="store_true", help="treat regime violations as errors (exit 4)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "protocol.backend": args.backend,
        "protocol.frame": args.frame,
        "protocol.phi_star": args.phi_star,
        "sweep.jobs": args.jobs,
        "output.path": args.out,
        "output.format": args.format,
        "output.figures": "false" if args.no_figures else None,
    }
    try:
        cfg = load(args.scenario, args.config, overrides)
    except ConfigError as exc:
        print(f"csq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, strict=args.strict)


if __name__ == "__main__":
    sys.exit(main())
