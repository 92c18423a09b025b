"""Serialisation of solution records, reports and grid samples.

Only the command-line layer touches the filesystem; the helpers here turn
domain objects into JSON-ready dicts and CSV text and back.  Python's float
repr is shortest-round-trip, so JSON values reload bit for bit.
"""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .lattice import FourierField, decompose, field_from_rows, grid_shape, synthesize
from .norms import NormReport
from .solver import SolutionRecord


def _rows(u: FourierField) -> list:
    j, k, ball = u.j, u.k, u.ball
    return [[int(a), int(b), float(z.real), float(z.imag)] for a, b, z in zip(j[ball], k[ball], u.coeffs[ball])]


def record_to_dict(rec: SolutionRecord) -> dict:
    u = rec.u
    return {
        "m": u.m,
        "coefficients": _rows(u),
        "beta_final": rec.beta_final,
        "residual_norm": rec.residual_norm,
        "I_value": rec.I_value,
        "norm_report": dict(rec.norm_report.values),
        "v_c0_history": list(rec.v_c0_history),
        "seed_descriptor": rec.seed_descriptor,
        "path": rec.path,
        "path_coefficients": [_rows(f) for f in rec.path_fields],
        "converged": rec.converged,
        "status": rec.status,
    }


def record_from_dict(data: dict) -> SolutionRecord:
    m = int(data["m"])
    u = field_from_rows(data["coefficients"], m)
    return SolutionRecord(
        d=decompose(u),
        beta_final=float(data["beta_final"]),
        residual_norm=float(data["residual_norm"]),
        I_value=float(data["I_value"]),
        norm_report=NormReport(dict(data["norm_report"])),
        v_c0_history=list(data["v_c0_history"]),
        seed_descriptor=dict(data["seed_descriptor"]),
        path=list(data["path"]),
        path_fields=[field_from_rows(r, m) for r in data.get("path_coefficients", [])],
        converged=bool(data["converged"]),
        status=str(data["status"]),
    )


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def grid_csv(u: FourierField, refine: int = 1) -> str:
    """``x,t,u`` samples on the collocation grid, 17 significant digits."""
    g = synthesize(u, *grid_shape(u.m, refine))
    X, T = np.meshgrid(g.x, g.t, indexing="ij")
    out = io.StringIO()
    out.write("x,t,u\n")
    for x, t, v in zip(X.ravel(), T.ravel(), g.values.ravel()):
        out.write(f"{x:.17g},{t:.17g},{v:.17g}\n")
    return out.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def read_json(path: Path):
    return json.loads(Path(path).read_text())
