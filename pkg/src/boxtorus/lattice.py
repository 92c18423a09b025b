"""Fourier fields on the periodic box Q = [0, pi] x [0, 2 pi].

A real field is stored by its complex amplitudes on the mode lattice,

    u(x, t) = sum_{j, k} c(j, k) exp(i (2 j x + k t)),

with the mean normalisation c(j, k) = |Q|^{-1} int_Q u exp(-i(2jx + kt)).
Only the modes of the ball 2|j| + |k| <= m are kept.  Coefficient tables are
dense arrays of shape (2*(m//2) + 1, 2*m + 1) indexed ``[j + m//2, k + m]``.
"""
from __future__ import annotations

import functools
import io
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.fft as sfft

from .errors import CharacteristicDataError, DomainError, RealnessError, TruncationError

Q_AREA = 2.0 * np.pi**2
PARTS = ("kernel", "Eplus", "Eminus", "mean")
QUADRANTS = ("++", "+-", "-+", "--")

# relative level below which kernel amplitudes count as round-off
KERNEL_TOL = 1e-14
REALNESS_TOL = 1e-12


def fft_workers() -> int:
    """Worker count for FFTs, capped by ``BOXTORUS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BOXTORUS_THREADS", "1")))
    except ValueError:
        return 1


class ModeIndex(NamedTuple):
    """A lattice point; basis function exp(i(2 j x + k t))."""

    j: int
    k: int

    @property
    def kind(self) -> str:
        """``'kernel'``, ``'Eplus'`` or ``'Eminus'``; (0, 0) is a kernel mode."""
        a, b = 2 * abs(self.j), abs(self.k)
        if a == b:
            return "kernel"
        return "Eplus" if b > a else "Eminus"

    @property
    def radius(self) -> int:
        return 2 * abs(self.j) + abs(self.k)


@functools.lru_cache(maxsize=None)
def mode_indices(m: int):
    """Return broadcast ``(j, k, in_ball)`` integer/bool arrays for radius m."""
    if m < 0:
        raise DomainError(f"truncation radius must be >= 0, got {m}")
    J = m // 2
    j, k = np.meshgrid(np.arange(-J, J + 1), np.arange(-m, m + 1), indexing="ij")
    ball = (2 * np.abs(j) + np.abs(k)) <= m
    for a in (j, k, ball):
        a.setflags(write=False)
    return j, k, ball


@functools.lru_cache(maxsize=None)
def part_masks(m: int) -> dict:
    j, k, ball = mode_indices(m)
    a, b = 2 * np.abs(j), np.abs(k)
    origin = (j == 0) & (k == 0)
    masks = {
        "kernel": ball & (a == b) & ~origin,
        "mean": origin,
        "Eplus": ball & (b > a),
        "Eminus": ball & (b < a),
    }
    for v in masks.values():
        v.setflags(write=False)
    return masks


def table_shape(m: int) -> tuple[int, int]:
    return (2 * (m // 2) + 1, 2 * m + 1)


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def grid_shape(m: int, refine: int = 1) -> tuple[int, int]:
    """Smallest power-of-two grid that represents radius-m fields, times ``refine``.

    Exact representation needs N_x > 2*(m//2) and N_t > 2*m.
    """
    return next_pow2(refine * (m + 1)), next_pow2(refine * (2 * m + 1))


@dataclass(frozen=True, eq=False)
class FourierField:
    """Immutable table of complex amplitudes on the ball 2|j| + |k| <= m."""

    coeffs: np.ndarray
    m: int

    def __post_init__(self):
        m = int(self.m)
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != table_shape(m):
            raise TruncationError(f"coefficient table of shape {c.shape} does not match radius {m}")
        _, _, ball = mode_indices(m)
        if np.any(c[~ball] != 0):
            raise TruncationError("nonzero amplitude outside the truncation radius")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "m", m)

    # construction ------------------------------------------------------
    @classmethod
    def zeros(cls, m: int) -> "FourierField":
        return cls(np.zeros(table_shape(m), complex), m)

    @classmethod
    def from_modes(cls, modes: dict, m: int, hermitian: bool = False) -> "FourierField":
        """Build from ``{(j, k): amplitude}``.

        With ``hermitian=True`` the conjugate partner of every listed mode is
        filled in unless it is listed too.
        """
        c = np.zeros(table_shape(m), complex)
        J = m // 2
        for (j, k), a in modes.items():
            if 2 * abs(j) + abs(k) > m:
                raise TruncationError(f"mode ({j}, {k}) lies outside radius {m}")
            c[j + J, k + m] = a
        if hermitian:
            for (j, k), a in modes.items():
                if (-j, -k) not in modes:
                    c[-j + J, -k + m] = np.conj(a)
        return cls(c, m)

    @classmethod
    def cosine(cls, j: int, k: int, amplitude: float, m: int, phase: float = 0.0) -> "FourierField":
        """The real field ``amplitude * cos(2 j x + k t + phase)``."""
        a = 0.5 * amplitude * np.exp(1j * phase)
        if j == 0 and k == 0:
            return cls.from_modes({(0, 0): amplitude * np.cos(phase)}, m)
        return cls.from_modes({(j, k): a, (-j, -k): np.conj(a)}, m)

    # lattice helpers ---------------------------------------------------
    @property
    def j(self) -> np.ndarray:
        return mode_indices(self.m)[0]

    @property
    def k(self) -> np.ndarray:
        return mode_indices(self.m)[1]

    @property
    def ball(self) -> np.ndarray:
        return mode_indices(self.m)[2]

    def __getitem__(self, jk) -> complex:
        j, k = jk
        if 2 * abs(j) + abs(k) > self.m:
            return 0j
        return complex(self.coeffs[j + self.m // 2, k + self.m])

    def modes(self, tol: float = 0.0):
        """Iterate ``((j, k), amplitude)`` over modes with |amplitude| > tol."""
        idx = np.argwhere(np.abs(self.coeffs) > tol)
        J = self.m // 2
        for a, b in idx:
            yield (int(a - J), int(b - self.m)), complex(self.coeffs[a, b])

    def conj_flip(self) -> "FourierField":
        """The table of the complex-conjugate field: c(j,k) -> conj c(-j,-k)."""
        return FourierField(np.conj(self.coeffs[::-1, ::-1]), self.m)

    def realness_defect(self) -> float:
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1, ::-1]))) / scale)

    def is_real(self, rtol: float = REALNESS_TOL) -> bool:
        return self.realness_defect() <= rtol

    def l2(self) -> float:
        """Coefficient l^2 norm; equals |Q|^{-1/2} times the L^2 norm."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def L2(self) -> float:
        return float(np.sqrt(Q_AREA) * self.l2())

    def inner(self, other: "FourierField") -> float:
        """Real coefficient inner product Re sum c1 conj(c2)."""
        _check_same_radius(self, other)
        return float(np.real(np.vdot(other.coeffs, self.coeffs)))

    # arithmetic --------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, FourierField):
            return NotImplemented
        _check_same_radius(self, other)
        return FourierField(self.coeffs + other.coeffs, self.m)

    def __sub__(self, other):
        if not isinstance(other, FourierField):
            return NotImplemented
        _check_same_radius(self, other)
        return FourierField(self.coeffs - other.coeffs, self.m)

    def __neg__(self):
        return FourierField(-self.coeffs, self.m)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierField):
            return NotImplemented
        return FourierField(self.coeffs * scalar, self.m)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FourierField(self.coeffs / scalar, self.m)

    def __repr__(self):
        n = int(np.count_nonzero(self.coeffs))
        return f"FourierField(m={self.m}, nonzero_modes={n})"


def _check_same_radius(a: FourierField, b: FourierField):
    if a.m != b.m:
        raise TruncationError(f"radius mismatch: {a.m} vs {b.m}")


def truncate(u: FourierField, m: int) -> FourierField:
    """Restrict to the ball of radius m (or zero-pad when m > u.m)."""
    if m == u.m:
        return u
    out = np.zeros(table_shape(m), complex)
    J, Ju = m // 2, u.m // 2
    if m < u.m:
        block = u.coeffs[Ju - J : Ju + J + 1, u.m - m : u.m + m + 1]
        out[...] = np.where(mode_indices(m)[2], block, 0)
    else:
        out[J - Ju : J + Ju + 1, m - u.m : m + u.m + 1] = u.coeffs
    return FourierField(out, m)


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples on x_a = pi a / N_x, t_b = 2 pi b / N_t (axis 0 is x)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise DomainError("grid values must be a 2-d array")
        for n in v.shape:
            if n < 1 or n & (n - 1):
                raise TruncationError(f"grid sizes must be powers of two, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def nt(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return np.pi * np.arange(self.nx) / self.nx

    @property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.nt) / self.nt

    @classmethod
    def from_function(cls, func, nx: int, nt: int) -> "GridField":
        x = np.pi * np.arange(nx) / nx
        t = 2 * np.pi * np.arange(nt) / nt
        return cls(func(x[:, None], t[None, :]) * np.ones((nx, nt)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def max_radius(nx: int, nt: int) -> int:
    """Largest truncation radius a grid of this size resolves exactly."""
    return min((nt - 1) // 2, 2 * ((nx - 1) // 2) + 1)


@functools.lru_cache(maxsize=64)
def _scatter_index(m: int, nx: int, nt: int):
    j, k, ball = mode_indices(m)
    return (j[ball] % nx, k[ball] % nt), ball


def _check_grid(m: int, nx: int, nt: int):
    if nx <= 2 * (m // 2) or nt <= 2 * m:
        raise TruncationError(
            f"grid {nx}x{nt} too small for truncation radius {m} "
            f"(need N_x > {2 * (m // 2)}, N_t > {2 * m})"
        )


def analyze(g: GridField, m: int | None = None) -> FourierField:
    """Fourier amplitudes of grid samples, truncated to radius m.

    ``m`` defaults to the largest radius the grid resolves.
    """
    nx, nt = g.values.shape
    if m is None:
        m = max_radius(nx, nt)
    _check_grid(m, nx, nt)
    spec = sfft.fft2(g.values, workers=fft_workers()) / (nx * nt)
    idx, ball = _scatter_index(m, nx, nt)
    c = np.zeros(table_shape(m), complex)
    c[ball] = spec[idx]
    return FourierField(c, m)


def synthesize(
    u: FourierField,
    nx: int | None = None,
    nt: int | None = None,
    *,
    refine: int = 1,
    real: bool = True,
) -> GridField:
    """Sample a field on the collocation grid.

    Parameters
    ----------
    u : FourierField
    nx, nt : int, optional
        Grid sizes; default ``grid_shape(u.m, refine)``.
    real : bool
        Require conjugate symmetry and return real samples.  Pass False for
        complex fields such as quadrant restrictions.
    """
    if nx is None or nt is None:
        gx, gt = grid_shape(u.m, refine)
        nx = nx or gx
        nt = nt or gt
    _check_grid(u.m, nx, nt)
    idx, ball = _scatter_index(u.m, nx, nt)
    spec = np.zeros((nx, nt), complex)
    spec[idx] = u.coeffs[ball]
    if real:
        defect = u.realness_defect()
        if defect > REALNESS_TOL:
            raise RealnessError(f"coefficients not conjugate-symmetric (defect {defect:.2e})")
        vals = sfft.irfft2(spec[:, : nt // 2 + 1], s=(nx, nt), workers=fft_workers()) * (nx * nt)
    else:
        vals = sfft.ifft2(spec, workers=fft_workers()) * (nx * nt)
    return GridField(vals)


def project(u: FourierField, part) -> FourierField:
    """Keep the modes of one class, or of a union of classes.

    ``part`` is one of ``'kernel'`` (characteristic modes k = +-2j, j != 0),
    ``'mean'`` ((0, 0)), ``'Eplus'`` (|k| > 2|j|), ``'Eminus'`` (|k| < 2|j|), or
    an iterable of these.  The four classes partition the lattice.
    """
    parts = (part,) if isinstance(part, str) else tuple(part)
    masks = part_masks(u.m)
    keep = np.zeros(table_shape(u.m), bool)
    for p in parts:
        if p not in masks:
            raise DomainError(f"unknown part {p!r}; expected one of {PARTS}")
        keep |= masks[p]
    return FourierField(np.where(keep, u.coeffs, 0), u.m)


def kernel_field(u: FourierField) -> FourierField:
    """Projection onto N: characteristic modes together with the mean."""
    return project(u, ("kernel", "mean"))


def range_field(u: FourierField) -> FourierField:
    return project(u, ("Eplus", "Eminus"))


def kernel_profiles(u: FourierField) -> tuple[np.ndarray, np.ndarray]:
    """Profile amplitudes of v = p1(x + t) + p2(x - t).

    Returns arrays indexed by j + m//4 for j in [-m//4, m//4]; ``p1[m//4] == 0``
    and the mean sits in ``p2[m//4]``.
    """
    off = range_field(u).coeffs
    scale = np.max(np.abs(u.coeffs), initial=0.0)
    if np.max(np.abs(off), initial=0.0) > KERNEL_TOL * max(scale, 1e-300):
        raise DomainError("field has non-kernel modes; project onto the kernel first")
    Jk = u.m // 4
    js = np.arange(-Jk, Jk + 1)
    J = u.m // 2
    p1 = u.coeffs[js + J, 2 * js + u.m].copy()
    p2 = u.coeffs[js + J, -2 * js + u.m].copy()
    p1[Jk] = 0.0
    return p1, p2


def profiles_to_field(p1: np.ndarray, p2: np.ndarray, m: int) -> FourierField:
    Jk = (len(p1) - 1) // 2
    if len(p1) != len(p2) or 4 * Jk > m:
        raise TruncationError("profile length inconsistent with radius")
    c = np.zeros(table_shape(m), complex)
    js = np.arange(-Jk, Jk + 1)
    J = m // 2
    c[js + J, -2 * js + m] = p2
    nz = js != 0
    c[js[nz] + J, 2 * js[nz] + m] = p1[nz]
    return FourierField(c, m)


@dataclass(frozen=True, eq=False)
class Decomposition:
    """u = w_plus + w_minus + p1(x + t) + p2(x - t)."""

    w_plus: FourierField
    w_minus: FourierField
    p1: np.ndarray
    p2: np.ndarray

    @property
    def m(self) -> int:
        return self.w_plus.m

    @property
    def mean(self) -> float:
        return float(np.real(self.p2[(len(self.p2) - 1) // 2]))

    @property
    def v(self) -> FourierField:
        return profiles_to_field(self.p1, self.p2, self.m)

    @property
    def w(self) -> FourierField:
        return self.w_plus + self.w_minus

    def field(self) -> FourierField:
        return self.w + self.v

    def v_plus(self) -> FourierField:
        """The right-moving profile p1(x + t) as a field."""
        return profiles_to_field(self.p1, np.zeros_like(self.p2), self.m)

    def v_minus(self) -> FourierField:
        return profiles_to_field(np.zeros_like(self.p1), self.p2, self.m)


def decompose(u: FourierField) -> Decomposition:
    p1, p2 = kernel_profiles(kernel_field(u))
    return Decomposition(project(u, "Eplus"), project(u, "Eminus"), p1, p2)


def as_field(u) -> FourierField:
    """Accept either a FourierField or a Decomposition."""
    if isinstance(u, Decomposition):
        return u.field()
    if isinstance(u, FourierField):
        return u
    raise TypeError(f"expected FourierField or Decomposition, got {type(u).__name__}")


def translate(u: FourierField, h1: float, h2: float) -> FourierField:
    """Coefficients of u(x + h1, t + h2)."""
    phase = np.exp(1j * (2 * u.j * h1 + u.k * h2))
    return FourierField(np.where(u.ball, u.coeffs * phase, 0), u.m)


def quadrant(u: FourierField, q: str) -> FourierField:
    """Restriction to a sign quadrant: ``'++'`` keeps j >= 0, k >= 0, and so on.

    Negative signs are strict (j < 0, k < 0) so the four pieces partition the
    lattice.  The result is complex in general.
    """
    j, k = u.j, u.k
    sel = {
        "++": (j >= 0) & (k >= 0),
        "+-": (j >= 0) & (k < 0),
        "-+": (j < 0) & (k >= 0),
        "--": (j < 0) & (k < 0),
    }
    if q not in sel:
        raise DomainError(f"unknown quadrant {q!r}")
    return FourierField(np.where(sel[q], u.coeffs, 0), u.m)


# real parametrisation ---------------------------------------------------

@functools.lru_cache(maxsize=None)
def _rep_index(m: int):
    j, k, ball = mode_indices(m)
    rep = ball & ((j > 0) | ((j == 0) & (k > 0)))
    J = m // 2
    a, b = np.nonzero(rep)
    return a, b, (2 * J - a), (2 * m - b), (J, m)


def real_dim(m: int) -> int:
    return 1 + 2 * len(_rep_index(m)[0])


def pack_real(c: np.ndarray, m: int) -> np.ndarray:
    """Map a conjugate-symmetric table to R^n isometrically (coefficient l^2)."""
    a, b, _, _, origin = _rep_index(m)
    r = np.sqrt(2.0) * c[a, b]
    return np.concatenate(([c[origin].real], r.real, r.imag))


def unpack_real(vec: np.ndarray, m: int) -> np.ndarray:
    a, b, ac, bc, origin = _rep_index(m)
    n = len(a)
    z = (vec[1 : n + 1] + 1j * vec[n + 1 :]) / np.sqrt(2.0)
    c = np.zeros(table_shape(m), complex)
    c[a, b] = z
    c[ac, bc] = np.conj(z)
    c[origin] = vec[0]
    return c


# random ensembles -------------------------------------------------------

def random_field(
    m: int,
    rng: np.random.Generator,
    decay: float = 1.25,
    kernel_free: bool = True,
) -> FourierField:
    """Real field with independent complex Gaussian amplitudes.

    Mode (j, k) gets variance (1 + 2|j| + |k|)^(-2 decay).  Draws are made in a
    fixed order over the conjugate representatives of the ball.
    """
    a, b, ac, bc, origin = _rep_index(m)
    j, k, _ = mode_indices(m)
    n = 2 * np.abs(j[a, b]) + np.abs(k[a, b])
    sd = (1.0 + n) ** (-decay)
    z = (rng.standard_normal(len(a)) + 1j * rng.standard_normal(len(a))) * sd / np.sqrt(2.0)
    c = np.zeros(table_shape(m), complex)
    c[a, b] = z
    c[ac, bc] = np.conj(z)
    c[origin] = rng.standard_normal()
    u = FourierField(c, m)
    if kernel_free:
        u = range_field(u)
    return u


def random_block_field(
    m: int, level: int, rng: np.random.Generator, kernel_free: bool = True
) -> FourierField:
    """Random field supported on one dyadic block (unit-variance amplitudes)."""
    from .norms import dyadic_levels

    u = random_field(m, rng, decay=0.0, kernel_free=kernel_free)
    return FourierField(np.where(dyadic_levels(m) == level, u.coeffs, 0), m)


# coefficient dumps ------------------------------------------------------

def to_csv(u: FourierField) -> str:
    """All ball modes as ``j,k,re,im`` rows sorted by (j, k); 17 significant digits."""
    out = io.StringIO()
    out.write("j,k,re,im\n")
    j, k, ball = mode_indices(u.m)
    for a, b in zip(*np.nonzero(ball)):
        z = u.coeffs[a, b]
        out.write(f"{j[a, b]},{k[a, b]},{z.real:.17g},{z.imag:.17g}\n")
    return out.getvalue()


def from_csv(text: str) -> FourierField:
    rows = [ln.split(",") for ln in text.strip().splitlines()]
    if not rows or rows[0] != ["j", "k", "re", "im"]:
        raise DomainError("coefficient dump must start with header j,k,re,im")
    body = [(int(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in rows[1:]]
    m = max((2 * abs(j) + abs(k) for j, k, _, _ in body), default=0)
    return FourierField.from_modes({(j, k): complex(re, im) for j, k, re, im in body}, m)


def field_rows(u: FourierField, tol: float = 0.0) -> list:
    """Nonzero modes as ``[j, k, re, im]`` lists (JSON friendly)."""
    return [[j, k, z.real, z.imag] for (j, k), z in u.modes(tol)]


def field_from_rows(rows: Iterable, m: int) -> FourierField:
    return FourierField.from_modes({(int(j), int(k)): complex(re, im) for j, k, re, im in rows}, m)


def check_kernel_free(u: FourierField, tol: float = KERNEL_TOL) -> FourierField:
    """Zero round-off kernel amplitudes; raise if any is significant."""
    ker = part_masks(u.m)["kernel"] | part_masks(u.m)["mean"]
    scale = np.max(np.abs(u.coeffs), initial=0.0)
    bad = np.abs(u.coeffs[ker])
    if scale > 0 and np.max(bad, initial=0.0) > tol * scale:
        raise CharacteristicDataError(
            f"kernel amplitude {np.max(bad):.3e} exceeds {tol:g} relative; project first"
        )
    return FourierField(np.where(ker, 0, u.coeffs), u.m)
