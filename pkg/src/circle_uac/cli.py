"""Command-line front end.

    circle-uac --command conjugate --map blaschke.txt --depth 10 --out runs/b01

Every run writes ``manifest.json`` plus the command's artifacts into ``--out``.
Artifacts and manifest are deterministic for a fixed configuration; the wall
time goes to ``timing.txt`` so that the JSON stays byte-identical.
Failures exit with status 2 and write ``error.json`` naming the error class.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import conjugacy as conj
from .ba_extension import beltrami_field, cui_compare, decay_profile, make_backend
from .circle_maps import CircleEndomorphism, build_lift, format_map_spec, load_map_spec, spec_hash
from .distortion import symmetric_profile, uaa_profile, vartheta, zeta
from .errors import CircleUacError
from .uac import StripSpec, certify_uac

COMMANDS = ("zeta", "distortion", "conjugate", "ba-field", "cui-compare", "uac-check")
LIFT_GRID = 2**12


@dataclass
class Tolerances:
    root_tol: float = 1e-12
    quad_tol: float = 1e-12
    tail_tol: float = 1e-15


@dataclass
class RunConfig:
    command: str
    output_dir: Path
    map_spec_path: Path | None = None
    depth: int = 10
    n_max: int = 4
    x_count: int = 64
    y_levels: list = field(default_factory=list)
    tolerances: Tolerances = field(default_factory=Tolerances)
    m_grid: list = field(default_factory=lambda: [round(1 + 0.1 * i, 10) for i in range(21)])
    compare_map_path: Path | None = None
    conjugacy_path: Path | None = None
    bounds: list = field(default_factory=list)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        t = self.tolerances
        if min(t.root_tol, t.quad_tol, t.tail_tol) <= 0:
            raise ValueError("tolerances must be positive")
        ys = np.asarray(self.y_levels, dtype=float)
        if ys.size and (np.any(ys <= 0) or np.any(np.diff(ys) >= 0)):
            raise ValueError("--ylevels must be positive and strictly decreasing")
        if self.command != "zeta" and self.map_spec_path is None and self.conjugacy_path is None:
            raise ValueError(f"--map is required for {self.command}")
        if self.bounds and len(self.bounds) != len(self.y_levels):
            raise ValueError("--bounds needs one bound per y level")

    def manifest(self) -> dict:
        d = asdict(self)
        for key in ("output_dir", "map_spec_path", "compare_map_path", "conjugacy_path"):
            d[key] = None if d[key] is None else str(d[key])
        return d


def _csv_floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _default_levels(command: str) -> list[float]:
    count = 4 if command == "uac-check" else 8
    return [2.0**-k for k in range(1, count + 1)]


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_map(path: Path) -> CircleEndomorphism:
    return load_map_spec(path)


def _conjugacy_for(cfg: RunConfig, map_path: Path | None, artifacts: dict):
    """Conjugacy H and (when a map is given) its lift F."""
    if map_path is None:
        H = conj.load(cfg.conjugacy_path)
        return H, None
    endo = _load_map(map_path)
    F = build_lift(endo, LIFT_GRID, cfg.tolerances.root_tol)
    artifacts.setdefault("maps", []).append({"spec": format_map_spec(endo), "sha256": spec_hash(endo)})
    if cfg.conjugacy_path is not None and map_path == cfg.map_spec_path:
        H = conj.load(cfg.conjugacy_path, degree=endo.degree)
    else:
        H = conj.build_conjugacy(F, cfg.depth, cfg.tolerances.root_tol)
    return H, F


def _profiles_csv(profiles) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "value", "n_max", "kind"])
    for p in profiles:
        for y, v in zip(p.ys, p.values):
            w.writerow([_fmt(y), _fmt(v), p.n_max, p.kind])
    return buf.getvalue()


def _cmd_zeta(cfg: RunConfig, out: Path, summary: dict) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "zeta", "vartheta"])
    for M in cfg.m_grid:
        w.writerow([_fmt(M), _fmt(zeta(M, cfg.tolerances.tail_tol)), _fmt(vartheta(M, cfg.tolerances.tail_tol))])
    _write(out / "zeta.csv", buf.getvalue())


def _cmd_distortion(cfg: RunConfig, out: Path, summary: dict) -> None:
    H, F = _conjugacy_for(cfg, cfg.map_spec_path, summary)
    xs = np.arange(cfg.x_count + 1) / cfg.x_count
    profiles = [symmetric_profile(H, cfg.y_levels, xs)]
    if F is not None:
        profiles.append(uaa_profile(F, cfg.n_max, cfg.y_levels, xs, cfg.tolerances.root_tol))
    _write(out / "profiles.csv", _profiles_csv(profiles))


def _cmd_conjugate(cfg: RunConfig, out: Path, summary: dict) -> None:
    H, F = _conjugacy_for(cfg, cfg.map_spec_path, summary)
    conj.save(H, out / "conjugacy.csv")
    cert = conj.qs_certificate(H)
    certs = {
        "level_consistency": H.level_consistency(),
        "qs_certificate": asdict(cert),
        "depth": H.depth,
        "degree": H.degree,
    }
    if F is not None:
        certs["commutation_residual"] = conj.commutation_residual(H, F)
    _write(out / "certificates.json", _json(certs))


def _cmd_ba_field(cfg: RunConfig, out: Path, summary: dict) -> None:
    H, _ = _conjugacy_for(cfg, cfg.map_spec_path, summary)
    bf = beltrami_field(H, cfg.x_count, cfg.y_levels, subject_id=f"conjugacy(depth={H.depth})")
    _write(out / "field.csv", bf.to_csv())
    _write(out / "field_meta.json", bf.metadata_json())
    _write(out / "decay_profile.csv", _profiles_csv([decay_profile(bf)]))


def _cmd_cui_compare(cfg: RunConfig, out: Path, summary: dict) -> None:
    H1, _ = _conjugacy_for(cfg, cfg.map_spec_path, summary)
    if cfg.compare_map_path is None:
        from .catalog import identity

        H0 = identity
    else:
        H0, _ = _conjugacy_for(cfg, cfg.compare_map_path, summary)
    cmp = cui_compare(H0, H1, cfg.x_count, cfg.y_levels, cfg.tolerances.quad_tol)
    _write(out / "cui_profiles.csv", _profiles_csv([cmp.skew_gap, cmp.mu_gap]))
    _write(out / "cui_summary.json", _json({"min_denominator": cmp.min_denominator}))


def _cmd_uac_check(cfg: RunConfig, out: Path, summary: dict) -> None:
    H, _ = _conjugacy_for(cfg, cfg.map_spec_path, summary)
    strip = StripSpec(max(cfg.y_levels), tuple(cfg.y_levels), cfg.x_count)
    schedule = list(zip(cfg.y_levels, cfg.bounds))
    prov = {
        "map_sha256": [m["sha256"] for m in summary.get("maps", [])],
        "root_tol": cfg.tolerances.root_tol,
        "backend": make_backend(H).metadata(),
    }
    report = certify_uac(H, H.degree, cfg.n_max, strip, schedule, provenance=prov)
    _write(out / "uac_report.json", report.to_json())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["radius", "angle", "value"])
    for r, a, v in report.annulus_rows():
        w.writerow([_fmt(r), _fmt(a), _fmt(v)])
    _write(out / "annulus.csv", buf.getvalue())


DISPATCH = {
    "zeta": _cmd_zeta,
    "distortion": _cmd_distortion,
    "conjugate": _cmd_conjugate,
    "ba-field": _cmd_ba_field,
    "cui-compare": _cmd_cui_compare,
    "uac-check": _cmd_uac_check,
}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not cfg.y_levels:
            cfg.y_levels = _default_levels(cfg.command)
        cfg.validate()
        start = time.perf_counter()
        summary: dict = {}
        DISPATCH[cfg.command](cfg, out, summary)
        manifest = {
            "config": cfg.manifest(),
            "inputs": summary,
            "versions": {
                "circle_uac": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
        }
        _write(out / "manifest.json", _json(manifest))
        _write(out / "timing.txt", f"wall_time_seconds {time.perf_counter() - start:.6f}\n")
    except (CircleUacError, ValueError, OSError) as exc:
        code = exc.code if isinstance(exc, CircleUacError) else type(exc).__name__
        payload = {"error": code, "message": str(exc), "command": cfg.command}
        try:
            _write(out / "error.json", _json(payload))
        except OSError:
            pass
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circle-uac", description=__doc__.splitlines()[0])
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--map", type=Path, help="map specification file")
    p.add_argument("--map2", type=Path, help="second map for cui-compare (default: identity)")
    p.add_argument("--conjugacy", type=Path, help="persisted conjugacy CSV to reuse")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--nmax", type=int, default=4)
    p.add_argument("--xcount", type=int, default=64)
    p.add_argument("--ylevels", type=_csv_floats, default=[], help="comma-separated decreasing heights")
    p.add_argument("--bounds", type=_csv_floats, default=[], help="uac-check bound per y level")
    p.add_argument("--mgrid", type=_csv_floats, default=None, help="M values for the zeta table")
    p.add_argument("--root-tol", type=float, default=1e-12)
    p.add_argument("--quad-tol", type=float, default=1e-12)
    p.add_argument("--tail-tol", type=float, default=1e-15)
    p.add_argument("--out", type=Path, required=True)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        output_dir=args.out,
        map_spec_path=args.map,
        depth=args.depth,
        n_max=args.nmax,
        x_count=args.xcount,
        y_levels=list(args.ylevels),
        tolerances=Tolerances(args.root_tol, args.quad_tol, args.tail_tol),
        compare_map_path=args.map2,
        conjugacy_path=args.conjugacy,
        bounds=list(args.bounds),
    )
    if args.mgrid is not None:
        cfg.m_grid = list(args.mgrid)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
