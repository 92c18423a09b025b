"""Numerical checks of the embedding estimates and of the regularity bootstrap.

Random ensembles draw each field at twice the working radius and truncate,
so the m and 2m samples of a sweep are nested.
"""
from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson

from .boxop import box_invert, holder_inversion_check
from .errors import DomainError
from .lattice import (
    Q_AREA,
    FourierField,
    GridField,
    as_field,
    mode_indices,
    part_masks,
    project,
    random_block_field,
    random_field,
    synthesize,
    truncate,
)
from .model import Nonlinearity, f_eval, f_field, pointwise_residual
from .norms import (
    c0_norm,
    empirical_holder_exponent,
    es_norm,
    holder_estimate,
    hs_norm,
    lp_norm,
    lq_coeff_norm,
    time_derivative_l2,
)


@dataclass
class EstimateReport:
    """Outcome of one estimate check.  ``passed`` iff worst_ratio <= envelope."""

    name: str
    samples: int
    worst_ratio: float
    envelope: float
    passed: bool
    table: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=float)

    @classmethod
    def from_json(cls, text: str) -> "EstimateReport":
        return cls(**json.loads(text))


def s_of_p(p: float) -> float:
    """Sobolev index s(p) = (p - 2)/(p - 1)."""
    return (p - 2) / (p - 1)


def p_of_s(s: float) -> float:
    """Embedding exponent p = (2 - s)/(1 - s)."""
    return (2 - s) / (1 - s)


@functools.lru_cache(maxsize=64)
def _tail_constant(s: float, m: int) -> float:
    """c = sup_A S(A)^(1/2) / A^(1-s), S(A) = sum of |4j^2-k^2|^-s over off-kernel radii <= A.

    S is constant between integers and A^(1-s) increases, so the supremum is
    attained at an integer A <= m.
    """
    j, k, ball = mode_indices(m)
    lam = np.abs(4 * j**2 - k**2)
    n = 2 * np.abs(j) + np.abs(k)
    off = ball & (lam > 0)
    S = np.bincount(n[off], weights=lam[off] ** (-s), minlength=m + 1)
    S = np.cumsum(S)
    A = np.arange(1, m + 1)
    return float(np.max(np.sqrt(S[1:]) / A ** (1 - s)))


def sobolev_constant(p: float, m: int) -> float:
    """Envelope C with ||f||_{L^p} <= C ||f||_{E^s(p)} for kernel-free f of radius m.

    C^p = 4 p |Q| (4c)^(p-2)/(p-2), from the distribution-function argument
    with Chebyshev's inequality on the high-frequency part.
    """
    if not p > 2:
        raise DomainError("the embedding constant needs p > 2")
    c = _tail_constant(s_of_p(p), m)
    return float((4 * p * Q_AREA * (4 * c) ** (p - 2) / (p - 2)) ** (1 / p))


def gn_constant(p: float, m: int) -> float:
    """Envelope for ||u||_{L^p} / (||u||_{L^2}^(1-s) ||u||_{E^1}^s), s = s(p)."""
    s = s_of_p(p)
    return sobolev_constant(p, m) * Q_AREA ** (-(1 - s) / 2)


# ratios --------------------------------------------------------------------

def sobolev_ratio(f: FourierField, p: float, refine: int = 2) -> float:
    e = es_norm(f, s_of_p(p))
    return lp_norm(f, p, refine=refine) / e if e > 0 else 0.0


def gn_ratio(u: FourierField, p: float, refine: int = 2) -> float:
    s = s_of_p(p)
    den = u.L2() ** (1 - s) * es_norm(u, 1.0) ** s
    return lp_norm(u, p, refine=refine) / den if den > 0 else 0.0


def _sweep(name, ratio, samples, m, decay, seed, envelope, refine):
    rng = np.random.default_rng(seed)
    table = []
    for i in range(samples):
        big = random_field(2 * m, rng, decay=decay)
        small = truncate(big, m)
        table.append({"ratio_m": ratio(small), "ratio_2m": ratio(big)})
    worst = max(r["ratio_m"] for r in table)
    worst2 = max(r["ratio_2m"] for r in table)
    drift = worst2 / worst - 1 if worst > 0 else 0.0
    ok = bool(np.isfinite(worst) and worst <= envelope)
    return EstimateReport(
        name, samples, worst, envelope, ok, table,
        {"m": m, "decay": decay, "seed": seed, "worst_ratio_2m": worst2, "drift": drift,
         "envelope_2m": None, "refine": refine},
    )


def _scale_gap(ratio, u):
    r1, r2 = ratio(u), ratio(7.3 * u)
    return abs(r2 - r1) / max(abs(r1), 1e-300)


def sobolev_check(
    samples: int,
    value: float = 0.5,
    mode: str = "from_s",
    *,
    m: int = 32,
    decay: float | None = None,
    seed: int = 0,
    refine: int = 2,
) -> EstimateReport:
    """Worst ratio ||f||_{L^p}/||f||_{E^s} over random kernel-free fields.

    Parameters
    ----------
    value : float
        s in (0, 1) when ``mode='from_s'``, p > 2 when ``mode='from_p'``.
    decay : float, optional
        Ensemble decay r; default s + 1.5, which keeps E^s finite as m grows.

    The report carries the drift of the worst ratio between radii m and 2m,
    the exact scale-invariance gap, and the worst ratio of pure dyadic-block
    fields by level (the compactness signature).
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    if mode == "from_s":
        s = float(value)
        if not 0 < s < 1:
            raise DomainError(f"s must lie in (0, 1), got {s}")
        p = p_of_s(s)
    elif mode == "from_p":
        p = float(value)
        if not p > 2:
            raise DomainError(f"p must exceed 2, got {p}")
        s = s_of_p(p)
    else:
        raise DomainError(f"mode must be 'from_s' or 'from_p', got {mode!r}")
    decay = s + 1.5 if decay is None else decay
    ratio = functools.partial(sobolev_ratio, p=p, refine=refine)
    rep = _sweep("sobolev", ratio, samples, m, decay, seed, sobolev_constant(p, m), refine)
    rep.extra.update(
        s=s, p=p, envelope_2m=sobolev_constant(p, 2 * m),
        scale_gap=_scale_gap(ratio, random_field(m, np.random.default_rng(seed), decay=decay)),
        block_worst=block_ratios(ratio, m, seed),
    )
    return rep


def block_ratios(ratio, m: int, seed: int = 0, per_level: int = 8) -> dict:
    """Worst ratio on random fields supported in a single dyadic block, by level."""
    rng = np.random.default_rng(seed + 1)
    top = int(np.log2(m))
    out = {}
    for level in range(1, top):
        vals = []
        for _ in range(per_level):
            f = random_block_field(m, level, rng)
            if np.any(f.coeffs):
                vals.append(ratio(f))
        if vals:
            out[level] = max(vals)
    return out


def gn_check(
    samples: int,
    p: float = 4.0,
    *,
    m: int = 32,
    decay: float = 2.5,
    seed: int = 0,
    refine: int = 2,
) -> EstimateReport:
    """Worst ratio ||u||_{L^p} / (||u||_{L^2}^(1-s) ||u||_{E^1}^s), s = s(p)."""
    if not p > 2:
        raise DomainError(f"p must exceed 2, got {p}")
    if samples < 1:
        raise DomainError("samples must be >= 1")
    ratio = functools.partial(gn_ratio, p=p, refine=refine)
    rep = _sweep("gagliardo_nirenberg", ratio, samples, m, decay, seed, gn_constant(p, m), refine)
    rep.extra.update(
        p=p, s=s_of_p(p), envelope_2m=gn_constant(p, 2 * m),
        scale_gap=_scale_gap(ratio, random_field(m, np.random.default_rng(seed), decay=decay)),
    )
    return rep


def holder_sweep(
    samples: int,
    p: float = 2.0,
    gamma: float = 0.45,
    *,
    m: int = 32,
    decay: float = 1.25,
    seed: int = 0,
    refine: int = 4,
) -> EstimateReport:
    """Worst ratio holder(box^{-1} f)/||f||_{L^p} at radii m and 2m.

    No explicit constant is available, so ``envelope`` is the worst ratio at
    2m inflated by 5%; the check then amounts to the drift criterion.
    """
    if not 1 < p <= 2:
        raise DomainError(f"p must lie in (1, 2], got {p}")
    if not 0 < gamma < 1 - 1 / p:
        raise DomainError(f"gamma must lie in (0, {1 - 1 / p:g})")

    def ratio(f):
        return holder_estimate(box_invert(f), gamma, refine=refine) / lp_norm(f, p, refine=refine)

    rep = _sweep("holder_inversion", ratio, samples, m, decay, seed, np.inf, refine)
    rep.envelope = 1.05 * rep.extra["worst_ratio_2m"]
    rep.passed = bool(rep.worst_ratio <= rep.envelope and abs(rep.extra["drift"]) < 0.05)
    rep.extra.update(p=p, gamma=gamma)
    return rep


def hausdorff_young_check(
    samples: int,
    ps=(1.0, 4.0 / 3.0, 2.0),
    *,
    m: int = 32,
    decay: float = 1.25,
    seed: int = 0,
    slack: float = 1e-10,
    refine: int = 1,
) -> EstimateReport:
    """||u^||_{l^q} <= |Q|^(-1/p) ||u||_{L^p}, 1/p + 1/q = 1, on random fields.

    ``worst_ratio`` is the largest lhs/rhs; the envelope is 1 + slack.
    """
    rng = np.random.default_rng(seed)
    table = []
    worst = 0.0
    for _ in range(samples):
        u = random_field(m, rng, decay=decay, kernel_free=False)
        g = synthesize(u, refine=refine)
        row = {}
        for p in ps:
            q = np.inf if p == 1 else p / (p - 1)
            lhs = lq_coeff_norm(u, q)
            rhs = Q_AREA ** (-1 / p) * lp_norm(g, p)
            row[f"{p:g}"] = lhs / rhs
            worst = max(worst, lhs / rhs)
        table.append(row)
    viol = sum(1 for row in table for r in row.values() if r > 1 + slack)
    return EstimateReport(
        "hausdorff_young", samples, worst, 1 + slack, worst <= 1 + slack, table,
        {"m": m, "decay": decay, "seed": seed, "violations": viol, "ps": list(ps)},
    )


# layer-cake replay ---------------------------------------------------------

def distribution_function(g: GridField, lam) -> np.ndarray:
    """w(lam) = |{|g| > lam}| measured on the grid."""
    v = np.sort(np.abs(g.values).ravel())
    lam = np.asarray(lam, float)
    return Q_AREA * (v.size - np.searchsorted(v, lam, side="right")) / v.size


def single_cosine_distribution(lam) -> np.ndarray:
    """Exact w(lam) for |cos(2x + t)| on Q: |Q|(1 - (2/pi) arcsin lam) for lam < 1."""
    lam = np.clip(np.asarray(lam, float), 0.0, 1.0)
    return Q_AREA * (1 - 2 / np.pi * np.arcsin(lam))


def layer_cake_oracle(f: FourierField, p: float, s: float | None = None, *, n_points: int = 2**14 + 1, refine: int = 4) -> float:
    """Relative gap between p int lam^(p-1) w_f(lam) dlam and ||f||_{L^p}^p.

    The integral uses Simpson's rule on ``n_points`` levels in [0, max|f|].
    """
    f = as_field(f)
    if s is not None and abs(s - s_of_p(p)) > 1e-12:
        raise DomainError(f"s must equal s(p) = {s_of_p(p):g}")
    if not np.any(f.coeffs):
        return 0.0
    g = synthesize(f, refine=refine, real=f.is_real())
    top = g.sup()
    lam = np.linspace(0.0, top, n_points)
    integral = p * simpson(lam ** (p - 1) * distribution_function(g, lam), x=lam)
    ref = lp_norm(g, p) ** p
    return float(abs(integral - ref) / ref)


def layer_cake_replay(f: FourierField, p: float, lams=None, *, refine: int = 4) -> dict:
    """Replay the two pointwise steps of the embedding proof at sample levels.

    For each lam: the low part f_{1,A} with A = (lam/(4 c ||f||_{E^s}))^(1/(1-s))
    satisfies sup|f_{1,A}| <= lam/4, and w_f(lam) <= w_{f_2,A}(lam/2).
    """
    s = s_of_p(p)
    f = as_field(f)
    c = _tail_constant(s, f.m)
    e = es_norm(f, s)
    g = synthesize(f, refine=refine, real=f.is_real())
    if lams is None:
        lams = np.linspace(0.05, 1.0, 12) * g.sup()
    n = 2 * np.abs(f.j) + np.abs(f.k)
    rows = []
    for lam in np.atleast_1d(lams):
        A = (lam / (4 * c * e)) ** (1 / (1 - s))
        low = FourierField(np.where(n <= A, f.coeffs, 0), f.m)
        high = f - low
        sup_low = synthesize(low, refine=refine, real=f.is_real()).sup()
        w_f = float(distribution_function(g, lam))
        w_h = float(distribution_function(synthesize(high, refine=refine, real=f.is_real()), lam / 2))
        rows.append({"lam": float(lam), "A": float(A), "sup_low": sup_low,
                     "low_ok": sup_low <= lam / 4 * (1 + 1e-12), "w_f": w_f, "w_high": w_h,
                     "dist_ok": w_f <= w_h})
    return {"rows": rows, "passed": all(r["low_ok"] and r["dist_ok"] for r in rows)}


# C^0 lemma diagnostic ------------------------------------------------------

def psi(nl: Nonlinearity, z, M5: float, n_xi: int = 2001, n_x: int = 65) -> np.ndarray:
    """psi(z) = min over |xi| <= M5 and x of f(x, z + xi) - f(x, xi)."""
    xi = np.linspace(-M5, M5, n_xi)
    x = np.linspace(0, np.pi, n_x)[:, None, None]
    z = np.atleast_1d(np.asarray(z, float))[None, :, None]
    vals = nl.f(x, z + xi) - nl.f(x, xi)
    return vals.min(axis=(0, 2))


def nu(nl: Nonlinearity, z, M5: float, **kw) -> np.ndarray:
    """Two-sided increment floor: min(psi(z), min over xi of f(xi) - f(xi - z))."""
    z = np.atleast_1d(np.asarray(z, float))
    up = psi(nl, z, M5, **kw)
    down = -_psi_max(nl, -z, M5, **kw)
    return np.minimum(up, down)


def _psi_max(nl, z, M5, n_xi=2001, n_x=65):
    xi = np.linspace(-M5, M5, n_xi)
    x = np.linspace(0, np.pi, n_x)[:, None, None]
    z = np.atleast_1d(np.asarray(z, float))[None, :, None]
    return (nl.f(x, z + xi) - nl.f(x, xi)).max(axis=(0, 2))


class C0Diagnostic(NamedTuple):
    lhs: float
    rhs: float
    case: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def c0_bound_diagnostic(nl: Nonlinearity, record, M5: float | None = None) -> C0Diagnostic:
    """Check the kernel C^0 bound at a computed solution.

    Case 1 (||v||_{C^0} <= 8 ||v||_{L^2}) returns (||v||_{C^0}, 8||v||_{L^2}, 1).
    Case 2 returns (nu(delta), 8 ||f(., w)||_{C^0}, 2) with
    delta = max(||v+||_{C^0}, ||v-||_{C^0}) / 2 and M5 defaulting to ||w||_{C^0}.
    """
    d = record.d
    v, w = d.v, d.w
    vc0, vl2 = c0_norm(v), v.L2()
    if vc0 <= 8 * vl2:
        return C0Diagnostic(vc0, 8 * vl2, 1)
    if M5 is None:
        M5 = c0_norm(w)
    delta = 0.5 * max(c0_norm(d.v_plus()), c0_norm(d.v_minus()))
    gw = synthesize(w, refine=4)
    rhs = 8 * f_eval(nl, gw).sup()
    return C0Diagnostic(float(nu(nl, delta, M5)[0]), float(rhs), 2)


# regularity bootstrap ------------------------------------------------------

BOOT_KEYS = ("w_h1", "w_h2", "w_h3", "v_t", "v_tt", "v_ttt", "pointwise_residual", "holder_exponent")


@dataclass
class BootstrapReport:
    rows: list
    variation: dict
    upward: dict
    holder_threshold: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=float)


def bootstrap_row(nl: Nonlinearity, u: FourierField, beta: float) -> dict:
    """Bootstrap quantities for one solution.

    w is regenerated from the range equation, w = -box^{-1} P_E f(x, u), so the
    H^k norms measure what the bootstrap controls rather than the iterate.
    """
    from .lattice import decompose

    d = decompose(u)
    fE = project(f_field(nl, u), ("Eplus", "Eminus"))
    w = -box_invert(fE) if np.any(fE.coeffs) else fE
    v = d.v
    return {
        "beta": beta,
        "w_h1": hs_norm(w, 1),
        "w_h2": hs_norm(w, 2),
        "w_h3": hs_norm(w, 3),
        "v_c0": c0_norm(v),
        "v_t": time_derivative_l2(v, 1),
        "v_tt": time_derivative_l2(v, 2),
        "v_ttt": time_derivative_l2(v, 3),
        "pointwise_residual": pointwise_residual(nl, u),
        "holder_exponent": empirical_holder_exponent(d.w),
        "u_c0": c0_norm(u),
    }


def variation(values, floor: float) -> float:
    """max/min with values below ``floor`` treated as numerical zero (ratio 1)."""
    vals = np.asarray(values, float)
    hi = vals.max(initial=0.0)
    if hi <= floor:
        return 1.0
    return float(hi / max(vals.min(), floor))


def bootstrap_report(nl: Nonlinearity, record) -> BootstrapReport:
    """Tabulate the bootstrap quantities along the record's beta path.

    ``variation`` is max/min along the path (floor 1e-8 (1 + ||u||_{C^0}));
    ``upward`` flags quantities whose value at the smallest beta exceeds the
    value at the largest by more than 10% above the floor.
    """
    fields = record.path_fields or [record.u]
    betas = [p["beta"] for p in record.path] or [record.beta_final]
    rows = [bootstrap_row(nl, u, b) for u, b in zip(fields, betas)]
    floor = 1e-8 * (1 + max(r["u_c0"] for r in rows))
    var, up = {}, {}
    for key in ("w_h1", "w_h2", "w_h3", "v_c0", "v_t", "v_tt", "v_ttt"):
        vals = [r[key] for r in rows]
        var[key] = variation(vals, floor)
        up[key] = bool(vals[-1] > 1.1 * vals[0] and vals[-1] > floor)
    return BootstrapReport(rows, var, up, 1 - nl.s / (nl.s + 1))
