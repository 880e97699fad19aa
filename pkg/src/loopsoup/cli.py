"""Command-line driver: samplers, couplings, kernel tables and the verification suite."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .core.generator import ConfigError, GeneratorSpec, _parse_real
from .core.harmonic import NotTransient, harmonic_pair
from .core.measures import MeasureError, RadonMeasure
from .coupling import CouplingPath, couple_path
from .dpp import chain_sample, wilson_sample
from .loopglue import extract_loops, sample_xi, transform_to_generator
from .occupation import sample_field
from .rng import replica_rng
from .verify import SUITES, format_row, run_suite

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class UsageError(Exception):
    pass


def _load_json(path: str | None, what: str) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{what} {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} {path}: top level must be an object")
    return doc


def _generator(doc: dict) -> GeneratorSpec:
    gdoc = doc.get("generator", {})
    if not isinstance(gdoc, dict):
        raise ConfigError("field 'generator' must be an object")
    return GeneratorSpec.from_config(gdoc)


def _measure(doc: dict, where: str) -> RadonMeasure:
    try:
        return RadonMeasure(
            atoms=tuple((float(x), float(c)) for x, c in doc.get("atoms", [])),
            density=tuple(tuple(_parse_real(v) for v in p) for p in doc.get("density", [])),
        )
    except (MeasureError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_grid(spec: str) -> np.ndarray:
    """``lo:hi:step`` to the grid lo, lo+step, ..., hi."""
    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"grid {spec!r}: expected lo:hi:step") from exc
    if not (step > 0 and hi > lo):
        raise ConfigError(f"grid {spec!r}: need hi > lo and step > 0")
    n = int(round((hi - lo) / step))
    if not math.isclose(lo + n * step, hi, rel_tol=1e-9, abs_tol=1e-9 * step):
        raise ConfigError(f"grid {spec!r}: step does not divide hi - lo")
    return np.linspace(lo, hi, n + 1)


def _window(v) -> tuple[float, float] | None:
    if v is None:
        return None
    if isinstance(v, str):
        v = v.split(":")
    try:
        lo, hi = (float(t) for t in v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"window {v!r}: expected lo:hi") from exc
    return lo, hi


def _pick(args, doc: dict, name: str, default=None):
    val = getattr(args, name, None)
    if val is not None:
        return val
    return doc.get(name, default)


def _write_csv(path: Path, kind: str, header: list[str], rows: Iterable, meta: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# loopsoup {kind} schema={SCHEMA} version={__version__} "
                 + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


# commands

def cmd_sample_dpp(args) -> int:
    doc = _load_json(args.config, "config")
    gen = _generator(doc)
    seed = int(_pick(args, doc, "seed", 0))
    reps = int(_pick(args, doc, "replicas", 1))
    sampler = _pick(args, doc, "sampler", "auto")
    window = _window(_pick(args, doc, "window"))
    if sampler == "auto":
        finite = all(gen.kappa.first_moment_finite(s) for s in ("left", "right"))
        sampler = "chain" if finite and window is None else "wilson"
    if sampler not in ("chain", "wilson"):
        raise ConfigError(f"sampler {sampler!r}: expected chain, wilson or auto")
    hs = harmonic_pair(gen, window=window)
    rows = []
    for r in range(reps):
        rng = replica_rng(seed, r)
        cfg = (chain_sample(gen, hs, rng) if sampler == "chain"
               else wilson_sample(gen, rng=rng, hs=hs, window=window, closure="exact"))
        rows.extend((kind, x, r) for kind, x, _, _ in cfg.rows(r, seed))
    _write_csv(Path(args.out) / "dpp.csv", "dpp", ["kind", "x", "replica_id"], rows,
               {"seed": seed, "sampler": sampler})
    return EXIT_OK


def cmd_sample_field(args) -> int:
    doc = _load_json(args.config, "config")
    gen = _generator(doc)
    seed = int(_pick(args, doc, "seed", 0))
    reps = int(_pick(args, doc, "replicas", 1))
    alpha = float(_pick(args, doc, "alpha", 1.0))
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    grid = parse_grid(_pick(args, doc, "grid", "0:10:0.01"))
    try:
        hs = harmonic_pair(gen)
    except NotTransient as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    for r in range(reps):
        fld = sample_field(gen, hs, alpha, grid, replica_rng(seed, r))
        rows.extend(fld.rows(r))
    _write_csv(Path(args.out) / "field.csv", "field", ["x", "value", "replica_id"], rows,
               {"seed": seed, "alpha": alpha})
    return EXIT_OK


def cmd_sample_loops(args) -> int:
    doc = _load_json(args.config, "config")
    seed = int(_pick(args, doc, "seed", 0))
    reps = int(_pick(args, doc, "replicas", 1))
    alpha = float(_pick(args, doc, "alpha", 1.0))
    x0 = float(_pick(args, doc, "x0", 0.0))
    stop = float(_pick(args, doc, "stop_level", x0 - 1.0))
    dt = _pick(args, doc, "dt")
    max_steps = int(_pick(args, doc, "max_steps", 10_000_000))
    hs = harmonic_pair(_generator(doc)) if "generator" in doc else None
    rows = []
    for r in range(reps):
        path = sample_xi(alpha, x0, stop, None if dt is None else float(dt), replica_rng(seed, r),
                         max_steps=max_steps, truncate=True)
        loops = extract_loops(path)
        out = transform_to_generator(path, hs=hs) if hs is not None else path
        for i, lp in enumerate(loops):
            seg = out.values[lp.start_index:lp.end_index + 1]
            t0, t1 = out.times[lp.start_index], out.times[lp.end_index]
            rows.append((r, i, float(seg.min()), float(seg.max()), float(t1 - t0), float(t0),
                         int(path.info["truncated"])))
    _write_csv(Path(args.out) / "loops.csv", "loops",
               ["replica_id", "loop", "min", "max", "duration", "t_start", "truncated"], rows,
               {"seed": seed, "alpha": alpha})
    return EXIT_OK


def _coupling_path(doc: dict, base: RadonMeasure) -> CouplingPath:
    comps = []
    for i, c in enumerate(doc.get("components", [])):
        mu = _measure(c.get("kappa", {}), f"components[{i}].kappa")
        q = c.get("q", [0.0, 1.0])
        try:
            comps.append((mu, float(q[0]), float(q[1])))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"components[{i}].q: expected [lo, hi]") from exc
    try:
        return CouplingPath(base, comps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_couple(args) -> int:
    doc = _load_json(args.config, "config")
    gen = _generator(doc)
    lam = _load_json(args.lambda_file, "lambda file")
    path = _coupling_path(lam, gen.kappa)
    seed = int(_pick(args, doc, "seed", 0))
    reps = int(_pick(args, doc, "replicas", 1))
    gen_t = gen.with_kappa(path.target)
    for g in (gen, gen_t):
        for s in ("left", "right"):
            if not g.kappa.first_moment_finite(s):
                raise ConfigError("couple needs killing with finite first moments")
    hs = harmonic_pair(gen)
    cache: dict = {}
    rows = []
    for r in range(reps):
        rng = replica_rng(seed, r)
        base = chain_sample(gen, hs, rng)
        out = couple_path(base, gen, path, rng, cache=cache)
        rows.extend(("Y", float(y), r) for y in base.Y)
        rows.extend(("Z", float(z), r) for z in base.Z)
        rows.extend(("Y~", float(y), r) for y in out.Y)
        rows.extend(("Z~", float(z), r) for z in out.Z)
    _write_csv(Path(args.out) / "couple.csv", "couple", ["kind", "x", "replica_id"], rows, {"seed": seed})
    return EXIT_OK


def cmd_kernels(args) -> int:
    doc = _load_json(args.config, "config")
    gen = _generator(doc)
    grid = parse_grid(_pick(args, doc, "grid", "-5:5:0.1"))
    grid = grid[(grid >= gen.lo) & (grid <= gen.hi)]
    hs = harmonic_pair(gen, window=(float(grid[0]), float(grid[-1])))
    uu, ud = hs.up.values(grid)[0], hs.down.values(grid)[0]
    rows = [(float(x), float(a), float(b), float(a * b), hs.kernel_k(float(x), float(x)))
            for x, a, b in zip(grid, uu, ud)]
    _write_csv(Path(args.out) / "kernels.csv", "kernels", ["x", "u_up", "u_down", "green_diag", "kernel_k_diag"],
               rows, {})
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from: {', '.join(SUITES)}")

    def show(row):
        print(format_row(row), flush=True)

    rows = run_suite(args.suite, seed=args.seed, scale=args.scale, progress=show)
    report = {"schema": SCHEMA, "version": __version__, "suite": args.suite, "scale": args.scale,
              "seed": args.seed, "rows": [r.as_dict() for r in rows],
              "passed": all(r.passed for r in rows)}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, default=_jsonable) + "\n")
    n_fail = sum(not r.passed for r in rows)
    print(f"{len(rows) - n_fail}/{len(rows)} passed")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopsoup", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default="out"):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--out", default=out_default, help="output directory")

    sp = sub.add_parser("sample-dpp", help="sample roots and cut points")
    common(sp)
    sp.add_argument("--sampler", choices=["auto", "chain", "wilson"])
    sp.add_argument("--window", help="lo:hi, required for killing without finite first moments")
    sp.set_defaults(func=cmd_sample_dpp)

    sp = sub.add_parser("sample-field", help="sample the occupation field on a grid")
    common(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--grid", help="lo:hi:step")
    sp.set_defaults(func=cmd_sample_field)

    sp = sub.add_parser("sample-loops", help="glue loops along a decreasing minimum and list them")
    common(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--x0", type=float)
    sp.add_argument("--stop-level", dest="stop_level", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--max-steps", dest="max_steps", type=int)
    sp.set_defaults(func=cmd_sample_loops)

    sp = sub.add_parser("couple", help="couple a sample with one for added killing")
    common(sp)
    sp.add_argument("--lambda-file", dest="lambda_file", required=True,
                    help="JSON with components [{kappa: {atoms, density}, q: [lo, hi]}]")
    sp.set_defaults(func=cmd_couple)

    sp = sub.add_parser("kernels", help="tabulate u_up, u_down, G and K on a grid")
    sp.add_argument("--config")
    sp.add_argument("--grid")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_kernels)

    sp = sub.add_parser("verify", help="run the statistical acceptance suite")
    sp.add_argument("--suite", default="all")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--scale", type=float, default=1.0, help="multiplier on Monte Carlo sample sizes")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigError, MeasureError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
