"""The periodic d'Alembertian and the linear estimates around it.

Sign convention: box = d_tt - d_xx acts on exp(i(2jx + kt)) by the symbol
4j^2 - k^2, which vanishes exactly on the characteristic modes k = +-2j.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .lattice import (
    KERNEL_TOL,
    QUADRANTS,
    FourierField,
    check_kernel_free,
    quadrant,
    synthesize,
    translate,
    truncate,
)
from .norms import dyadic_levels, holder_estimate, hs_norm_bare, lp_norm


class CheckResult(NamedTuple):
    lhs: float
    rhs: float
    passed: bool
    info: dict = {}


def symbol(m: int) -> np.ndarray:
    from .lattice import mode_indices

    j, k, _ = mode_indices(m)
    return 4 * j**2 - k**2


def box_apply(u: FourierField) -> FourierField:
    return FourierField(u.coeffs * symbol(u.m), u.m)


def box_invert(f: FourierField, tol: float = KERNEL_TOL) -> FourierField:
    """Solve box u = f off the kernel.

    Kernel amplitudes below ``tol`` relative to the largest amplitude are
    dropped; larger ones raise CharacteristicDataError.
    """
    f = check_kernel_free(f, tol)
    lam = symbol(f.m)
    safe = np.where(lam == 0, 1, lam)
    return FourierField(np.where(lam == 0, 0, f.coeffs / safe), f.m)


def h1_bootstrap_check(f: FourierField) -> CheckResult:
    """||box^{-1} f||^2 in the (4j^2 + k^2) weight against sum |f(j,k)|^2."""
    f = check_kernel_free(f)
    lam = symbol(f.m).astype(float)
    a2 = np.abs(f.coeffs) ** 2
    off = lam != 0
    weight = (4.0 * f.j**2 + f.k**2)[off] / lam[off] ** 2
    lhs = float(np.sum(weight * a2[off]))
    rhs = float(np.sum(a2))
    return CheckResult(lhs, rhs, lhs <= rhs * (1 + 4 * np.finfo(float).eps))


def _ratio(f: FourierField, p: float, gamma: float, refine: int) -> tuple[float, float]:
    lhs = holder_estimate(box_invert(f), gamma, refine=refine)
    return lhs, lhs / lp_norm(f, p, refine=refine)


def holder_inversion_check(
    f: FourierField, p: float, gamma: float, refine: int = 4, drift_tol: float = 0.05
) -> CheckResult:
    """Hoelder estimate of box^{-1} f against ||f||_{L^p}, under truncation doubling.

    The ratio holder/||f||_{L^p} is measured for f and for its truncation to
    half the radius.  ``rhs`` is the larger ratio times ||f||_{L^p}; the check
    passes when the two ratios agree within ``drift_tol``.
    """
    if not 1 < p <= 2:
        raise DomainError(f"p must lie in (1, 2], got {p}")
    if not 0 < gamma < 1 - 1 / p:
        raise DomainError(f"gamma={gamma} outside (0, 1 - 1/p) = (0, {1 - 1 / p:g})")
    f = check_kernel_free(f)
    if not np.any(f.coeffs):
        return CheckResult(0.0, 0.0, True, {"ratio": 0.0, "ratio_half": 0.0})
    lhs, r_full = _ratio(f, p, gamma, refine)
    half = truncate(f, max(f.m // 2, 1))
    if np.any(half.coeffs):
        _, r_half = _ratio(half, p, gamma, refine)
    else:
        r_half = r_full
    c = max(r_full, r_half)
    drift = abs(r_full / r_half - 1)
    rhs = c * lp_norm(f, p, refine=refine)
    return CheckResult(lhs, rhs, drift < drift_tol, {"ratio": r_full, "ratio_half": r_half, "drift": drift})


_SHIFT_SIGNS = {"++": (1, 1), "--": (-1, -1), "-+": (-1, 1), "+-": (1, -1)}


def holder_to_sobolev_check(
    u: FourierField, gamma: float, gamma_p: float, refine: int = 4
) -> CheckResult:
    """Quadrant-wise H^gamma' bound by sup-norms of shift differences.

    For each quadrant q with sign pattern (s1, s2),

        lhs_q = sum (2|j| + |k|)^(2 gamma') |u_q(j, k)|^2
        rhs_q = sum_m 2^(2 (m+1) gamma') sup|u_q(x + s1 h, t + s2 h) - u_q|^2,

    with h = (2 pi / 3) 2^-m.  On block m the multiplier |exp(i n h) - 1|
    is at least sqrt(3), which is what makes lhs_q <= rhs_q.
    """
    if not 0 < gamma_p < gamma < 1:
        raise DomainError(f"need 0 < gamma' < gamma < 1, got gamma={gamma}, gamma'={gamma_p}")
    levels = dyadic_levels(u.m)
    top = int(levels.max())
    per_q = {}
    ok = True
    lhs_total = rhs_total = 0.0
    for q in QUADRANTS:
        uq = quadrant(u, q)
        lhs_q = hs_norm_bare(uq, gamma_p) ** 2
        rhs_q = 0.0
        if np.any(uq.coeffs):
            s1, s2 = _SHIFT_SIGNS[q]
            for L in range(top + 1):
                h = (2 * np.pi / 3) * 2.0**-L
                diff = translate(uq, s1 * h, s2 * h) - uq
                sup = synthesize(diff, refine=refine, real=False).sup()
                rhs_q += 2.0 ** (2 * (L + 1) * gamma_p) * sup**2
        per_q[q] = (lhs_q, rhs_q)
        ok &= lhs_q <= rhs_q * (1 + 1e-12)
        lhs_total += lhs_q
        rhs_total += rhs_q
    identity_gap = abs(lhs_total - hs_norm_bare(u, gamma_p) ** 2)
    ok &= identity_gap <= 1e-10 * max(lhs_total, 1e-300)
    return CheckResult(lhs_total, rhs_total, bool(ok), {"quadrants": per_q, "identity_gap": identity_gap})


def telescoping_modulus_floor(level: int) -> float:
    """min |exp(i n h) - 1| over the radii n of block ``level``, h = (2pi/3) 2^-level."""
    lo = 0 if level == 0 else 2**level + 1
    n = np.arange(max(lo, 1), 2 ** (level + 1) + 1)
    h = (2 * np.pi / 3) * 2.0**-level
    return float(np.min(np.abs(np.exp(1j * n * h) - 1)))
