"""Norms and seminorms on Fourier fields, including the dyadic Hoelder estimator."""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .lattice import (
    Q_AREA,
    Decomposition,
    FourierField,
    GridField,
    as_field,
    check_kernel_free,
    decompose,
    grid_shape,
    part_masks,
    synthesize,
    truncate,
)


class DyadicBlock(NamedTuple):
    """Modes with 2^level < 2|j| + |k| <= 2^(level+1); level 0 is 2|j| + |k| <= 2."""

    level: int
    field: FourierField


@functools.lru_cache(maxsize=None)
def dyadic_levels(m: int) -> np.ndarray:
    from .lattice import mode_indices

    j, k, ball = mode_indices(m)
    n = 2 * np.abs(j) + np.abs(k)
    lev = np.zeros(n.shape, int)
    big = n >= 3
    lev[big] = np.floor(np.log2(n[big] - 1)).astype(int)
    lev[~ball] = -1
    lev.setflags(write=False)
    return lev


def dyadic_blocks(u: FourierField, occupied_only: bool = True) -> list[DyadicBlock]:
    lev = dyadic_levels(u.m)
    out = []
    for L in range(int(lev.max()) + 1):
        c = np.where(lev == L, u.coeffs, 0)
        if occupied_only and not np.any(c):
            continue
        out.append(DyadicBlock(L, FourierField(c, u.m)))
    return out


def block_band(level: int, m: int) -> int:
    """Radius that contains a block; used to size its sampling grid."""
    return min(2 ** (level + 1), m) if level > 0 else min(2, m)


def block_sup(block: DyadicBlock, refine: int = 4) -> float:
    """Grid maximum of |block| on a grid refined ``refine`` times its own band."""
    band = block_band(block.level, block.field.m)
    b = truncate(block.field, band)
    return synthesize(b, refine=refine, real=b.is_real()).sup()


def c0_norm(u: FourierField, refine: int = 4) -> float:
    """Grid maximum of |u|; a lower bound on the supremum."""
    return synthesize(u, refine=refine, real=u.is_real()).sup()


# energy-type norms -------------------------------------------------------

def _lam(u: FourierField) -> np.ndarray:
    return 4 * u.j**2 - u.k**2


def e_norm(u) -> float:
    """Norm of E: (|Q|/4)|k^2 - 4j^2| off the kernel, 4 j^2 on it, plus the mean."""
    u = as_field(u)
    masks = part_masks(u.m)
    a2 = np.abs(u.coeffs) ** 2
    off = masks["Eplus"] | masks["Eminus"]
    total = (
        Q_AREA / 4 * np.sum(np.abs(_lam(u))[off] * a2[off])
        + np.sum(4 * u.j[masks["kernel"]] ** 2 * a2[masks["kernel"]])
        + np.sum(a2[masks["mean"]])
    )
    return float(np.sqrt(total))


def es_norm(u, s: float) -> float:
    """(sum |u(j,k)|^2 |k^2 - 4j^2|^s)^(1/2) over off-kernel modes.

    Raises CharacteristicDataError when the field has kernel content.
    """
    u = check_kernel_free(as_field(u))
    w = np.abs(_lam(u)).astype(float)
    return float(np.sqrt(np.sum(np.where(w > 0, w, 0.0) ** s * np.abs(u.coeffs) ** 2)))


def hs_norm(u, s: float) -> float:
    """Sobolev norm with weight (1 + 2|j| + |k|)^(2s) on coefficients."""
    if s < 0:
        raise DomainError("hs_norm needs s >= 0")
    u = as_field(u)
    n = 1.0 + 2 * np.abs(u.j) + np.abs(u.k)
    return float(np.sqrt(np.sum(n ** (2 * s) * np.abs(u.coeffs) ** 2)))


def hs_norm_bare(u, s: float) -> float:
    """Same with the bare weight (2|j| + |k|)^(2s); the mean mode carries no weight."""
    u = as_field(u)
    n = (2 * np.abs(u.j) + np.abs(u.k)).astype(float)
    w = np.where(n > 0, n ** (2 * s), 0.0 if s > 0 else 1.0)
    return float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def h1_wave_norm(u) -> float:
    """Seminorm with weight 4j^2 + k^2, i.e. (|u_x|^2 + |u_t|^2) in coefficients."""
    u = as_field(u)
    return float(np.sqrt(np.sum((4 * u.j**2 + u.k**2) * np.abs(u.coeffs) ** 2)))


def time_derivative_l2(u, order: int = 1) -> float:
    """L^2(Q) norm of the order-th time derivative."""
    u = as_field(u)
    return float(np.sqrt(Q_AREA * np.sum(np.abs(u.k) ** (2 * order) * np.abs(u.coeffs) ** 2)))


# integral norms ----------------------------------------------------------

def lp_norm(g, p: float, refine: int = 4) -> float:
    """Quadrature L^p(Q) norm of grid samples; ``p = inf`` gives the grid max.

    A FourierField is sampled first with ``synthesize(..., refine=refine)``.
    """
    if not p >= 1:
        raise DomainError(f"L^p needs p >= 1, got {p}")
    if isinstance(g, (FourierField, Decomposition)):
        u = as_field(g)
        g = synthesize(u, refine=refine, real=u.is_real())
    v = np.abs(g.values)
    if np.isinf(p):
        return float(v.max())
    vmax = v.max()
    if vmax == 0:
        return 0.0
    # scale out the max to keep |v|^p finite for large p
    return float(vmax * (np.mean((v / vmax) ** p) * Q_AREA) ** (1.0 / p))


def lq_coeff_norm(u, q: float) -> float:
    if not q >= 1:
        raise DomainError(f"l^q needs q >= 1, got {q}")
    a = np.abs(as_field(u).coeffs)
    if np.isinf(q):
        return float(a.max())
    amax = a.max()
    if amax == 0:
        return 0.0
    return float(amax * np.sum((a / amax) ** q) ** (1.0 / q))


# dyadic Hoelder estimator -------------------------------------------------

def holder_estimate(u, gamma: float, refine: int = 4) -> float:
    """max_m 2^(gamma m) sup|Delta_m u| + sup|u|.

    Block suprema are grid maxima, each on a grid refined ``refine`` times the
    block's band.  This is a Besov B^gamma_{inf,inf}-type estimator, not the
    classical Hoelder modulus.
    """
    u = as_field(u)
    if not np.any(u.coeffs):
        return 0.0
    best = max(2.0 ** (gamma * b.level) * block_sup(b, refine) for b in dyadic_blocks(u))
    return float(best + c0_norm(u, refine))


def block_sups(u, refine: int = 4) -> dict:
    """``{level: sup|Delta_level u|}`` over occupied levels."""
    u = as_field(u)
    return {b.level: block_sup(b, refine) for b in dyadic_blocks(u)}


def empirical_holder_exponent(u, min_level: int = 2, refine: int = 4) -> float:
    """Negative least-squares slope of log2 sup|Delta_m u| against m.

    Uses occupied levels >= ``min_level``; falls back to levels >= 1 when fewer
    than two are occupied.  NaN when no slope can be fitted.
    """
    sups = {L: s for L, s in block_sups(u, refine).items() if s > 0}
    for lo in (min_level, 1):
        pts = sorted((L, s) for L, s in sups.items() if L >= lo)
        if len(pts) >= 2:
            L, s = np.array(pts).T
            slope = np.polyfit(L, np.log2(s), 1)[0]
            return float(-slope)
    return float("nan")


# beta-weighted norm ------------------------------------------------------

def kernel_h1_sq(v: FourierField) -> float:
    """||v||_{L^2}^2 + ||v_t||_{L^2}^2."""
    return float(Q_AREA * np.sum((1 + v.k**2) * np.abs(v.coeffs) ** 2))


def beta_norm(d, beta: float) -> float:
    """(||w+||_E^2 + ||w-||_E^2 + beta ||v||_{H^1}^2)^(1/2)."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if isinstance(d, FourierField):
        d = decompose(d)
    return float(np.sqrt(e_norm(d.w_plus) ** 2 + e_norm(d.w_minus) ** 2 + beta * kernel_h1_sq(d.v)))


# reports ----------------------------------------------------------------

@dataclass
class NormReport:
    """Flat table of named norm values; keys like ``'lp.4'`` carry the exponent."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def to_json(self) -> str:
        return json.dumps(self.values, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NormReport":
        return cls(dict(json.loads(text)))


def _key(name, x):
    return f"{name}.{x:g}"


def norm_report(
    d,
    *,
    s: float = 0.5,
    hs: float = 1.0,
    p: float = 4.0,
    q: float = 2.0,
    gamma: float = 0.45,
    beta: float | None = None,
    refine: int = 4,
) -> NormReport:
    """Collect the standard norms of a field.

    ``es_norm`` is evaluated on the off-kernel part, since E^s excludes the
    characteristics.  ``beta_norm`` is included only when ``beta`` is given.
    """
    u = as_field(d)
    dd = d if isinstance(d, Decomposition) else decompose(u)
    vals = {
        "e_norm": e_norm(u),
        _key("es_norm", s): es_norm(dd.w, s),
        _key("hs_norm", hs): hs_norm(u, hs),
        _key("lp", p): lp_norm(u, p, refine=refine),
        _key("lq", q): lq_coeff_norm(u, q),
        _key("holder", gamma): holder_estimate(u, gamma, refine=refine),
    }
    if beta is not None:
        vals[_key("beta_norm", beta)] = beta_norm(dd, beta)
    return NormReport(vals)
