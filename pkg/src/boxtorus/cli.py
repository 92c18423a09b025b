"""Command-line entry point: ``boxtorus {solve,verify-estimates,selftest,report}``.

Configuration is a JSON object with flat dotted keys, for example

    {"nonlinearity.s": 3, "schedule.m": 16, "multi.l_max": 3}

Command-line flags override file keys and every run echoes the merged
configuration into ``manifest.json``.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as bio
from . import verify
from .errors import BoxtorusError
from .lattice import random_field, to_csv
from .model import Nonlinearity
from .solver import ContinuationSchedule, multi_start, orbit_distance

log = logging.getLogger("boxtorus")

ESTIMATES = ("sobolev", "gn", "holder", "hausdorff_young", "layer_cake")

DEFAULTS = {
    "mode": "solve",
    "seed": 0,
    "out_dir": "boxtorus-out",
    "workers": 1,
    "nonlinearity.s": 3.0,
    "nonlinearity.alpha": 0.5,
    "nonlinearity.a_coeffs": [1.0],
    "nonlinearity.b_coeffs": [],
    "schedule.beta0": 1.0,
    "schedule.beta_min": 1e-4,
    "schedule.factor": 0.5,
    "schedule.m": 16,
    "schedule.tol_residual": 1e-10,
    "schedule.max_newton": 50,
    "multi.l_max": 3,
    "multi.starts_per_level": 3,
    "multi.amp0": 1.0,
    "verify.samples": 200,
    "verify.decay": None,
    "verify.estimates": list(ESTIMATES),
    "verify.m": 32,
    "verify.s": 0.5,
    "verify.p": 4.0,
}


def _num(lo=None, hi=None, lo_open=False, integer=False, nullable=False):
    def check(key, v):
        if v is None and nullable:
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise BoxtorusError(f"{key}: expected a number, got {v!r}")
        if integer and int(v) != v:
            raise BoxtorusError(f"{key}: expected an integer, got {v!r}")
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise BoxtorusError(f"{key}: must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            raise BoxtorusError(f"{key}: must be <= {hi}, got {v}")

    return check


def _coeff_list(key, v):
    if not isinstance(v, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        raise BoxtorusError(f"{key}: expected a list of numbers, got {v!r}")


def _choice(options):
    def check(key, v):
        if v not in options:
            raise BoxtorusError(f"{key}: must be one of {', '.join(options)}, got {v!r}")

    return check


def _estimates(key, v):
    if not isinstance(v, list) or any(e not in ESTIMATES for e in v):
        raise BoxtorusError(f"{key}: expected a list drawn from {', '.join(ESTIMATES)}, got {v!r}")


def _string(key, v):
    if not isinstance(v, str) or not v:
        raise BoxtorusError(f"{key}: expected a non-empty string")


VALIDATORS = {
    "mode": _choice(("solve", "verify-estimates", "selftest")),
    "seed": _num(0, 2**64 - 1, integer=True),
    "out_dir": _string,
    "workers": _num(1, integer=True),
    "nonlinearity.s": _num(1, lo_open=True),
    "nonlinearity.alpha": _num(0),
    "nonlinearity.a_coeffs": _coeff_list,
    "nonlinearity.b_coeffs": _coeff_list,
    "schedule.beta0": _num(0, lo_open=True),
    "schedule.beta_min": _num(0, lo_open=True),
    "schedule.factor": _num(0, 1, lo_open=True),
    "schedule.m": _num(1, 512, integer=True),
    "schedule.tol_residual": _num(0, lo_open=True),
    "schedule.max_newton": _num(1, integer=True),
    "multi.l_max": _num(1, integer=True),
    "multi.starts_per_level": _num(1, integer=True),
    "multi.amp0": _num(0, lo_open=True),
    "verify.samples": _num(1, integer=True),
    "verify.decay": _num(0, lo_open=True, nullable=True),
    "verify.estimates": _estimates,
    "verify.m": _num(4, 256, integer=True),
    "verify.s": _num(0, 1, lo_open=True),
    "verify.p": _num(2, lo_open=True),
}


@dataclass
class RunConfig:
    """Validated flat configuration."""

    values: dict

    @classmethod
    def build(cls, overrides: dict | None = None, base: dict | None = None) -> "RunConfig":
        vals = dict(DEFAULTS)
        for source in (base or {}, overrides or {}):
            for key, v in source.items():
                if key not in DEFAULTS:
                    raise BoxtorusError(f"unknown configuration key {key!r}")
                vals[key] = v
        for key, check in VALIDATORS.items():
            check(key, vals[key])
        if vals["verify.s"] >= 1:
            raise BoxtorusError("verify.s: must be < 1")
        if vals["schedule.beta_min"] > vals["schedule.beta0"]:
            raise BoxtorusError("schedule.beta_min: must not exceed schedule.beta0")
        cfg = cls(vals)
        cfg.nonlinearity()  # admissibility
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def nonlinearity(self) -> Nonlinearity:
        v = self.values
        try:
            return Nonlinearity(v["nonlinearity.s"], v["nonlinearity.alpha"],
                                tuple(v["nonlinearity.a_coeffs"]), tuple(v["nonlinearity.b_coeffs"]))
        except BoxtorusError as exc:
            raise BoxtorusError(f"nonlinearity: {exc}") from exc

    def schedule(self) -> ContinuationSchedule:
        v = self.values
        return ContinuationSchedule(v["schedule.beta0"], v["schedule.beta_min"], v["schedule.factor"],
                                    int(v["schedule.max_newton"]), v["schedule.tol_residual"], int(v["schedule.m"]))


def _versions() -> dict:
    return {"boxtorus": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _manifest(cfg: RunConfig, timings: dict, **extra) -> str:
    return bio.dumps({"config": cfg.values, "versions": _versions(), "timings": timings, **extra})


# modes ----------------------------------------------------------------------

def run_solve(cfg: RunConfig, out: Path) -> int:
    t0 = time.perf_counter()
    nl = cfg.nonlinearity()
    records = multi_start(nl, cfg.schedule(), int(cfg["multi.l_max"]), int(cfg["multi.starts_per_level"]),
                          amp0=cfg["multi.amp0"], workers=int(cfg["workers"]))
    t1 = time.perf_counter()
    names = []
    for i, rec in enumerate(records):
        stem = f"branch_{i:02d}"
        bio.write_text(out / f"{stem}.json", bio.dumps(bio.record_to_dict(rec)))
        bio.write_text(out / f"{stem}_coeffs.csv", to_csv(rec.u))
        bio.write_text(out / f"{stem}_grid.csv", bio.grid_csv(rec.u))
        names.append(stem)
    timings = {"solve_s": t1 - t0, "write_s": time.perf_counter() - t1}
    bio.write_text(out / "manifest.json", _manifest(cfg, timings, mode="solve", branches=names))
    print(f"{len(records)} branch(es) written to {out}")
    return 0 if records else 1


def _run_estimate(name: str, cfg: RunConfig):
    n, m, seed, decay = int(cfg["verify.samples"]), int(cfg["verify.m"]), int(cfg["seed"]), cfg["verify.decay"]
    if name == "sobolev":
        return verify.sobolev_check(n, cfg["verify.s"], m=m, decay=decay, seed=seed)
    if name == "gn":
        return verify.gn_check(n, cfg["verify.p"], m=m, seed=seed, **({} if decay is None else {"decay": decay}))
    if name == "holder":
        return verify.holder_sweep(n, m=m, seed=seed, **({} if decay is None else {"decay": decay}))
    if name == "hausdorff_young":
        return verify.hausdorff_young_check(n, m=m, seed=seed, **({} if decay is None else {"decay": decay}))
    rng = np.random.default_rng(seed)
    p = verify.p_of_s(cfg["verify.s"])
    gaps = [verify.layer_cake_oracle(random_field(m, rng, decay=decay or 1.25), p) for _ in range(n)]
    return verify.EstimateReport("layer_cake", n, max(gaps), 1e-3, max(gaps) < 1e-3,
                                 [{"gap": g} for g in gaps], {"p": p, "m": m})


def run_verify(cfg: RunConfig, out: Path) -> int:
    timings, ok = {}, True
    for name in cfg["verify.estimates"]:
        t0 = time.perf_counter()
        rep = _run_estimate(name, cfg)
        timings[name] = time.perf_counter() - t0
        bio.write_text(out / f"estimate_{name}.json", rep.to_json() + "\n")
        drift = rep.extra.get("drift")
        tail = f", drift m->2m {drift:+.2%}" if drift is not None else ""
        print(f"{name:16s} worst {rep.worst_ratio:.6g} envelope {rep.envelope:.6g} "
              f"{'PASS' if rep.passed else 'FAIL'}{tail}")
        ok &= rep.passed
    bio.write_text(out / "manifest.json", _manifest(cfg, timings, mode="verify-estimates",
                                                    reports=[f"estimate_{n}.json" for n in cfg["verify.estimates"]]))
    return 0 if ok else 1


def run_selftest(cfg: RunConfig, out: Path | None) -> int:
    from .selftest import run_selftest as suite

    t0 = time.perf_counter()
    results = suite(int(cfg["seed"]))
    for name, passed, value in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({value:.3g})")
    if out is not None:
        bio.write_text(out / "manifest.json", _manifest(
            cfg, {"selftest_s": time.perf_counter() - t0}, mode="selftest",
            results=[{"name": n, "passed": p, "value": v} for n, p, v in results]))
    return 0 if all(p for _, p, _ in results) else 1


def report_summary(out_dir) -> str:
    """Table of the branches of a finished solve run, sorted by I_beta."""
    out = Path(out_dir)
    mpath = out / "manifest.json"
    if not mpath.exists():
        raise BoxtorusError(f"no manifest.json in {out}")
    try:
        man = bio.read_json(mpath)
        branches = man["branches"]
        cfg = RunConfig.build(man["config"])
        recs = [bio.record_from_dict(bio.read_json(out / f"{b}.json")) for b in branches]
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise BoxtorusError(f"corrupt run directory {out}: {exc}") from exc
    if not recs:
        raise BoxtorusError(f"run in {out} has no branches")
    order = sorted(range(len(recs)), key=lambda i: recs[i].I_value)
    recs = [recs[i] for i in order]
    names = [branches[i] for i in order]
    nl = cfg.nonlinearity()
    lines = [f"{'branch':10s} {'I_beta':>14s} {'residual':>10s} {'|v|_C0':>10s} {'holder':>8s}"]
    from .norms import c0_norm, empirical_holder_exponent

    for name, r in zip(names, recs):
        h = empirical_holder_exponent(r.d.w)
        lines.append(f"{name:10s} {r.I_value:14.8g} {r.residual_norm:10.2e} {c0_norm(r.d.v):10.3e} {h:8.3f}")
    if len(recs) > 1:
        lines.append("")
        lines.append("aligned L2 distances")
        for i, a in enumerate(recs):
            row = " ".join(f"{orbit_distance(nl, a.u, b.u):10.3e}" for b in recs)
            lines.append(f"{names[i]:10s} {row}")
    return "\n".join(lines)


# argument parsing -----------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxtorus", description="Time-periodic solutions of a nonlinear wave equation.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON file of flat dotted keys")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key (VALUE parsed as JSON)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("solve", help="compute solution branches")
    common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--l-max", type=int)

    p = sub.add_parser("verify-estimates", help="check the embedding estimates on random fields")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--decay", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--estimates", nargs="+", choices=ESTIMATES)

    p = sub.add_parser("selftest", help="run the built-in property suite")
    common(p)

    p = sub.add_parser("report", help="summarise a finished solve run")
    p.add_argument("out_dir", type=Path)
    return ap


def _overrides(args) -> dict:
    o = {}
    if args.command != "report":
        o["mode"] = args.command
    for flag, key in (("seed", "seed"), ("samples", "verify.samples"), ("s", "verify.s"), ("p", "verify.p"),
                      ("decay", "verify.decay"), ("estimates", "verify.estimates"), ("l_max", "multi.l_max")):
        if getattr(args, flag, None) is not None:
            o[key] = getattr(args, flag)
    if getattr(args, "m", None) is not None:
        o["schedule.m" if args.command == "solve" else "verify.m"] = args.m
    if getattr(args, "out", None) is not None:
        o["out_dir"] = str(args.out)
    for item in getattr(args, "set", []):
        key, sep, val = item.partition("=")
        if not sep:
            raise BoxtorusError(f"--set expects KEY=VALUE, got {item!r}")
        o[key.strip()] = _parse_value(val)
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            print(report_summary(args.out_dir))
            return 0
        base = {}
        if args.config is not None:
            try:
                base = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise BoxtorusError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(base, dict):
                raise BoxtorusError("config file must hold a JSON object")
        cfg = RunConfig.build(_overrides(args), base)
        out = Path(cfg["out_dir"])
        if args.command == "solve":
            return run_solve(cfg, out)
        if args.command == "verify-estimates":
            return run_verify(cfg, out)
        return run_selftest(cfg, out if args.out is not None else None)
    except BoxtorusError as exc:
        print(f"boxtorus: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
