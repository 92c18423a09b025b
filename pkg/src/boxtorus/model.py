"""Nonlinearity, penalised action and Euler-Lagrange residual.

The equation is u_tt - u_xx + f(x, u) = 0 with

    f(x, u) = a(x) |u|^(s-1) u + alpha u + b(x),

and the penalised action on E^m + N^m is

    I_beta(u) = int_Q [ (u_t^2 - u_x^2) / 2 - beta (v^2 + v_t^2) / 2 - F(x, u) ],

where v is the kernel (characteristic plus mean) component of u.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft

from .errors import DomainError
from .lattice import (
    Q_AREA,
    Decomposition,
    FourierField,
    GridField,
    as_field,
    decompose,
    fft_workers,
    grid_shape,
    mode_indices,
    next_pow2,
    part_masks,
    synthesize,
    table_shape,
)
from .boxop import box_apply


def _cosine_series(coeffs, x):
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    for j, c in enumerate(coeffs):
        out = out + c * np.cos(2 * j * x)
    return out


@dataclass(frozen=True)
class Nonlinearity:
    """f(x, u) = a(x)|u|^(s-1)u + alpha u + b(x).

    ``a_coeffs`` and ``b_coeffs`` are cosine-series coefficients in x:
    a(x) = sum_j a_j cos(2 j x).  ``a`` must be positive, or identically zero
    for the purely linear problem.
    """

    s: float = 3.0
    alpha: float = 0.5
    a_coeffs: tuple = (1.0,)
    b_coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", tuple(float(c) for c in self.a_coeffs))
        object.__setattr__(self, "b_coeffs", tuple(float(c) for c in self.b_coeffs))
        if not self.s > 1:
            raise DomainError(f"growth exponent s must exceed 1, got {self.s}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not self.is_linear:
            lo, hi = self.a_range
            if lo <= 0:
                raise DomainError(f"a(x) must be positive, min is {lo:.4g}")
            if not lo > hi / (self.s + 1):
                raise DomainError(
                    f"inadmissible: min a = {lo:.4g} must exceed max a / (s+1) = {hi / (self.s + 1):.4g}"
                )

    # coefficient profiles -------------------------------------------------
    @property
    def is_linear(self) -> bool:
        return not any(self.a_coeffs)

    @property
    def has_forcing(self) -> bool:
        return any(self.b_coeffs)

    @property
    def odd_integer(self) -> bool:
        return float(self.s).is_integer() and int(self.s) % 2 == 1

    def a(self, x):
        return _cosine_series(self.a_coeffs, x)

    def b(self, x):
        return _cosine_series(self.b_coeffs, x)

    @functools.cached_property
    def a_range(self) -> tuple[float, float]:
        x = np.linspace(0, np.pi, 4097)
        ax = self.a(x)
        return float(ax.min()), float(ax.max())

    @functools.cached_property
    def b_max(self) -> float:
        if not self.has_forcing:
            return 0.0
        return float(np.max(np.abs(self.b(np.linspace(0, np.pi, 4097)))))

    # pointwise evaluation ------------------------------------------------
    def _power(self, u):
        return np.abs(u) ** (self.s - 1) * u

    def f(self, x, u):
        return self.a(x) * self._power(u) + self.alpha * u + self.b(x)

    def f_u(self, x, u):
        return self.s * self.a(x) * np.abs(u) ** (self.s - 1) + self.alpha

    def f_uu(self, x, u):
        return self.s * (self.s - 1) * self.a(x) * np.abs(u) ** (self.s - 2) * np.sign(u)

    def F(self, x, u):
        return self.a(x) * np.abs(u) ** (self.s + 1) / (self.s + 1) + 0.5 * self.alpha * u**2 + self.b(x) * u

    # growth constants ----------------------------------------------------
    def envelope(self) -> dict:
        """Constants of the two-sided growth bound.

        With sgn(u) folded in, c0_lower |u|^s + c1 <= sgn(u) f(x, u) <=
        c0_upper |u|^s + c2 for all x, u.  The linear term is absorbed into the
        upper coefficient: c0_upper = max a + eta, with eta half the admissibility
        margin (s+1) min a - max a, so c0_lower > c0_upper / (s+1) still holds.
        """
        lo, hi = self.a_range
        if self.is_linear:
            return {"c0_lower": 0.0, "c0_upper": 0.0, "c1": -self.b_max, "c2": float("inf"), "eta": 0.0}
        eta = 0.5 * ((self.s + 1) * lo - hi) if self.alpha > 0 else 0.0
        c2 = self.b_max
        if self.alpha > 0:
            r = (self.alpha / (self.s * eta)) ** (1 / (self.s - 1))
            c2 += self.alpha * r * (self.s - 1) / self.s
        return {"c0_lower": lo, "c0_upper": hi + eta, "c1": -self.b_max, "c2": c2, "eta": eta}

    def energy_bound_constants(self) -> tuple[float, float]:
        """(a1, a2) with int (u f / 2 - F) >= a1 int |u|^(s+1) - a2 for every u."""
        if self.is_linear:
            return 0.0, 0.0
        lo, _ = self.a_range
        a1 = 0.5 * lo * (0.5 - 1 / (self.s + 1))
        B = self.b_max
        if B == 0:
            return a1, 0.0
        r = (B / (2 * a1 * (self.s + 1))) ** (1 / self.s)
        return a1, Q_AREA * (0.5 * B * r - a1 * r ** (self.s + 1))

    @property
    def x_band(self) -> int:
        return max(len(self.a_coeffs), len(self.b_coeffs), 1) - 1

    def to_dict(self) -> dict:
        return {"s": self.s, "alpha": self.alpha, "a_coeffs": list(self.a_coeffs), "b_coeffs": list(self.b_coeffs)}


# grid evaluation ---------------------------------------------------------

def _x_column(g: GridField):
    return g.x[:, None]


def f_eval(nl: Nonlinearity, g: GridField) -> GridField:
    return GridField(nl.f(_x_column(g), g.values))


def f_prime_eval(nl: Nonlinearity, g: GridField) -> GridField:
    return GridField(nl.f_u(_x_column(g), g.values))


def f_second_eval(nl: Nonlinearity, g: GridField) -> GridField:
    return GridField(nl.f_uu(_x_column(g), g.values))


def F_eval(nl: Nonlinearity, g: GridField) -> GridField:
    return GridField(nl.F(_x_column(g), g.values))


def padded_shape(nl: Nonlinearity, m: int, factor: int = 1) -> tuple[int, int]:
    """Grid on which products are de-aliased for radius-m fields.

    For odd integer s the nonlinearity is a polynomial of degree s in u, and the
    grid below reproduces the retained coefficients of f(x, u) and the mean of
    F(x, u) exactly.  Otherwise a 4x refined grid is used.
    """
    if nl.odd_integer:
        deg = int(nl.s) + 1
        J = m // 2
        nx = max(next_pow2(deg * J + nl.x_band + 1), grid_shape(m)[0])
        nt = max(next_pow2(deg * m + 1), grid_shape(m)[1])
        pad = -(-deg // 2)
        gx, gt = grid_shape(m, pad)
        nx, nt = max(nx, gx), max(nt, gt)
    else:
        nx, nt = grid_shape(m, 4)
    return nx * factor, nt * factor


class _Pseudo:
    """Cached transforms between a radius-m table and a padded real grid."""

    def __init__(self, nl: Nonlinearity, m: int, factor: int = 1):
        self.nl = nl
        self.m = m
        self.nx, self.nt = padded_shape(nl, m, factor)
        j, k, ball = mode_indices(m)
        self.ball = ball
        self.jx = j[ball] % self.nx
        self.kt = k[ball]
        self.pos = self.kt >= 0
        x = np.pi * np.arange(self.nx) / self.nx
        self.ax = nl.a(x)[:, None]
        self.bx = nl.b(x)[:, None]
        self.scale = self.nx * self.nt

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        half = np.zeros((self.nx, self.nt // 2 + 1), complex)
        half[self.jx[self.pos], self.kt[self.pos]] = c[self.ball][self.pos]
        return sfft.irfft2(half, s=(self.nx, self.nt), workers=fft_workers()) * self.scale

    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        spec = sfft.rfft2(values, workers=fft_workers()) / self.scale
        c = np.zeros(table_shape(self.m), complex)
        vals = np.where(
            self.pos,
            spec[self.jx, np.abs(self.kt)],
            np.conj(spec[(-self.jx) % self.nx, np.abs(self.kt)]),
        )
        c[self.ball] = vals
        return c

    def f(self, ug):
        nl = self.nl
        return self.ax * (np.abs(ug) ** (nl.s - 1) * ug) + nl.alpha * ug + self.bx

    def f_u(self, ug):
        nl = self.nl
        return nl.s * self.ax * np.abs(ug) ** (nl.s - 1) + nl.alpha

    def F(self, ug):
        nl = self.nl
        return self.ax * np.abs(ug) ** (nl.s + 1) / (nl.s + 1) + 0.5 * nl.alpha * ug**2 + self.bx * ug


@functools.lru_cache(maxsize=32)
def _pseudo(nl: Nonlinearity, m: int, factor: int = 1) -> _Pseudo:
    return _Pseudo(nl, m, factor)


def f_field(nl: Nonlinearity, u, factor: int = 1) -> FourierField:
    """Coefficients of f(x, u) on the ball of u, computed on the de-aliased grid."""
    u = as_field(u)
    ps = _pseudo(nl, u.m, factor)
    return FourierField(ps.to_coeffs(ps.f(ps.to_grid(u.coeffs))), u.m)


def integrate_F(nl: Nonlinearity, u, factor: int = 1) -> float:
    u = as_field(u)
    ps = _pseudo(nl, u.m, factor)
    return float(Q_AREA * np.mean(ps.F(ps.to_grid(u.coeffs))))


# action and residual -----------------------------------------------------

def _lam_beta(m: int, beta: float) -> np.ndarray:
    """Diagonal of the symmetric linearisation: 4j^2 - k^2 on E, beta(1 + k^2) on N."""
    j, k, _ = mode_indices(m)
    masks = part_masks(m)
    N = masks["kernel"] | masks["mean"]
    return np.where(N, beta * (1.0 + k**2), 4.0 * j**2 - k**2)


def quadratic_part(u: FourierField, beta: float) -> float:
    """int_Q (u_t^2 - u_x^2)/2 - beta (v^2 + v_t^2)/2."""
    masks = part_masks(u.m)
    N = masks["kernel"] | masks["mean"]
    a2 = np.abs(u.coeffs) ** 2
    wave = np.where(N, 0.0, (u.k**2 - 4.0 * u.j**2) * a2)
    pen = np.where(N, (1.0 + u.k**2) * a2, 0.0)
    return float(0.5 * Q_AREA * (np.sum(wave) - beta * np.sum(pen)))


def functional_value(nl: Nonlinearity, d, beta: float) -> float:
    """I_beta at d; the F integral is exact quadrature for odd integer s."""
    if beta < 0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    u = as_field(d)
    return quadratic_part(u, beta) - integrate_F(nl, u)


class PenalizedResidual(NamedTuple):
    """Euler-Lagrange residual split by mode class.

    range_part = (k^2 - 4j^2) w - f on E modes, kernel_part = beta(1 + k^2) v + f
    on N modes.  Both vanish exactly at a critical point of I_beta.
    """

    range_part: FourierField
    kernel_part: FourierField
    beta: float

    def norm(self) -> float:
        return float(np.hypot(self.range_part.l2(), self.kernel_part.l2()))

    def as_field(self) -> FourierField:
        return self.range_part + self.kernel_part


def _symmetric_residual(nl: Nonlinearity, c: np.ndarray, m: int, beta: float) -> np.ndarray:
    """G = Lambda_beta c + P f(u); equals -range_part on E and kernel_part on N."""
    ps = _pseudo(nl, m)
    return _lam_beta(m, beta) * c + ps.to_coeffs(ps.f(ps.to_grid(c)))


def residual(nl: Nonlinearity, d, beta: float) -> PenalizedResidual:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    u = as_field(d)
    G = _symmetric_residual(nl, u.coeffs, u.m, beta)
    masks = part_masks(u.m)
    N = masks["kernel"] | masks["mean"]
    E = masks["Eplus"] | masks["Eminus"]
    return PenalizedResidual(
        FourierField(np.where(E, -G, 0), u.m),
        FourierField(np.where(N, G, 0), u.m),
        beta,
    )


def pairing(res: PenalizedResidual, phi) -> float:
    """Pairing under which dI_beta(u)[phi] = -pairing(residual(u), phi).

    |Q| Re sum kernel_part conj(phi) - |Q| Re sum range_part conj(phi).
    """
    phi = as_field(phi)
    return Q_AREA * (res.kernel_part.inner(phi) - res.range_part.inner(phi))


def energy_identity(nl: Nonlinearity, d, beta: float) -> tuple[float, float, float]:
    """I_beta(u) - I_beta'(u)[u] / 2 against int_Q (u f / 2 - F).

    The two agree for every u, not only at critical points.
    """
    u = as_field(d)
    res = residual(nl, u, beta)
    lhs = functional_value(nl, u, beta) + 0.5 * pairing(res, u)
    ps = _pseudo(nl, u.m)
    ug = ps.to_grid(u.coeffs)
    rhs = float(Q_AREA * np.mean(0.5 * ug * ps.f(ug) - ps.F(ug)))
    return lhs, rhs, abs(lhs - rhs)


def unpenalized_residual(nl: Nonlinearity, d, factor: int = 2) -> FourierField:
    """box w + P_E f(x, u), with f's coefficients taken on a ``factor``-times finer grid."""
    u = as_field(d)
    fhat = f_field(nl, u, factor=factor)
    masks = part_masks(u.m)
    E = masks["Eplus"] | masks["Eminus"]
    return FourierField(np.where(E, box_apply(u).coeffs + fhat.coeffs, 0), u.m)


def pointwise_residual(nl: Nonlinearity, d, refine: int = 4) -> float:
    """sup over a refined grid of |u_tt - u_xx + f(x, u)|."""
    u = as_field(d)
    g = synthesize(u, refine=refine)
    box = synthesize(box_apply(u), refine=refine)
    return float(np.max(np.abs(box.values + f_eval(nl, g).values)))
