"""Critical points of the penalised action and their continuation to small beta.

Newton's method runs in the real packed coordinates of ``lattice.pack_real``,
in which the symmetric residual

    G(u) = Lambda_beta u + P f(x, u)

is the negative gradient of I_beta (up to the factor |Q|) and its Jacobian
Lambda_beta + P f_u P is symmetric.  Linear solves use preconditioned MINRES,
which also copes with the null directions created by translation symmetry.
"""
from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DomainError, NonConvergenceError
from .lattice import (
    Q_AREA,
    Decomposition,
    FourierField,
    as_field,
    decompose,
    mode_indices,
    pack_real,
    part_masks,
    real_dim,
    translate,
    unpack_real,
    _rep_index,
)
from .model import Nonlinearity, _lam_beta, _pseudo, functional_value
from .norms import NormReport, c0_norm, hs_norm, norm_report, time_derivative_l2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContinuationSchedule:
    """Geometric penalty schedule beta0, beta0*factor, ..., beta_min."""

    beta0: float = 1.0
    beta_min: float = 1e-4
    factor: float = 0.5
    max_newton: int = 50
    tol_residual: float = 1e-10
    m: int = 16

    def __post_init__(self):
        if not 0 < self.beta_min <= self.beta0:
            raise DomainError(f"need 0 < beta_min <= beta0, got {self.beta_min}, {self.beta0}")
        if not 0 < self.factor < 1:
            raise DomainError(f"factor must lie in (0, 1), got {self.factor}")
        if not self.tol_residual > 0:
            raise DomainError("tol_residual must be positive")
        if self.max_newton < 1:
            raise DomainError("max_newton must be >= 1")
        if self.m < 1:
            raise DomainError("truncation radius m must be >= 1")

    def betas(self) -> list[float]:
        out = [float(self.beta0)]
        while out[-1] > self.beta_min * (1 + 1e-12):
            out.append(max(out[-1] * self.factor, self.beta_min))
        return out


@dataclass
class SolutionRecord:
    """A converged (or partially continued) branch.

    ``path`` holds one dict of tracked norms per beta and ``path_fields`` the
    corresponding solutions, so the bootstrap diagnostics can be replayed.
    """

    d: Decomposition
    beta_final: float
    residual_norm: float
    I_value: float
    norm_report: NormReport
    v_c0_history: list
    seed_descriptor: dict
    path: list = field(default_factory=list)
    path_fields: list = field(default_factory=list)
    converged: bool = True
    status: str = "converged"

    @property
    def u(self) -> FourierField:
        return self.d.field()


# alignment ----------------------------------------------------------------

def _cross(c1, c2, j, k, h1, th):
    """Re sum c1 conj(c2) e^{i(2j h1 + k th)} with its gradient and Hessian."""
    S = c1 * np.conj(c2)
    e = S * np.exp(1j * (2 * j * h1 + k * th))
    a, b = 2.0 * j, k.astype(float)
    val = np.sum(e).real
    grad = np.array([np.sum(1j * a * e).real, np.sum(1j * b * e).real])
    hess = -np.array(
        [[np.sum(a * a * e).real, np.sum(a * b * e).real], [np.sum(a * b * e).real, np.sum(b * b * e).real]]
    )
    return val, grad, hess


def align_shifts(u1: FourierField, u2: FourierField, space: bool = False, oversample: int = 16):
    """Shifts (h1, theta) minimising ||u1(. + h1, . + theta) - u2||_{L^2}.

    With ``space=False`` only time shifts are searched (h1 = 0).  The search
    takes the best point of a fine FFT grid and polishes it by Newton's method
    on the cross-correlation.  Returns ``(h1, theta, distance)``.
    """
    if u1.m != u2.m:
        raise DomainError("fields must share a truncation radius")
    m = u1.m
    j, k, _ = mode_indices(m)
    S = u1.coeffs * np.conj(u2.coeffs)
    nt = 1 << int(np.ceil(np.log2(oversample * (2 * m + 1))))
    J = m // 2
    nx = 1 << int(np.ceil(np.log2(oversample * (2 * J + 1)))) if space and J > 0 else 1
    grid = np.zeros((nx, nt), complex)
    np.add.at(grid, (j % nx, k % nt), S)
    # C(h1, th) on the grid h1 = pi a / nx, th = 2 pi b / nt
    C = np.real(np.fft.ifft2(grid) * nx * nt)
    a0, b0 = np.unravel_index(int(np.argmax(C)), C.shape)
    x = np.array([np.pi * a0 / nx, 2 * np.pi * b0 / nt])
    for _ in range(20):
        _, g, H = _cross(u1.coeffs, u2.coeffs, j, k, x[0], x[1])
        if not space:
            g, H = g[1:], H[1:, 1:]
        if not np.all(np.isfinite(H)) or np.max(np.abs(g)) == 0:
            break
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.diag(H) < 0):
            break
        step = np.clip(step, -np.pi / nt, np.pi / nt)
        if space:
            x = x + step
        else:
            x[1] += step[0]
        if np.max(np.abs(step)) < 1e-15:
            break
    h1 = float(x[0] % np.pi) if space else 0.0
    th = float(x[1] % (2 * np.pi))
    dist = (translate(u1, h1, th) - u2).L2()
    # keep the grid optimum if the polish wandered off
    d0 = (translate(u1, np.pi * a0 / nx if space else 0.0, 2 * np.pi * b0 / nt) - u2).L2()
    if d0 < dist:
        h1, th, dist = (np.pi * a0 / nx if space else 0.0), 2 * np.pi * b0 / nt, d0
    return h1, th, float(dist)


def align_time_shift(u1, u2) -> tuple[float, float]:
    """(theta*, distance) with theta* minimising ||u1(., . + theta) - u2||_{L^2}."""
    _, th, dist = align_shifts(as_field(u1), as_field(u2), space=False)
    return th, dist


def _x_invariant(nl: Nonlinearity) -> bool:
    return not any(nl.a_coeffs[1:]) and not any(nl.b_coeffs[1:])


def orbit_distance(nl: Nonlinearity, u1, u2) -> float:
    """Aligned L^2 distance modulo the symmetries of ``nl``.

    Time shifts always act; space shifts act too when a and b are constant.
    """
    return align_shifts(as_field(u1), as_field(u2), space=_x_invariant(nl))[2]


# Newton -------------------------------------------------------------------

class _System:
    """Packed residual and Jacobian of G at a fixed (nl, m, beta)."""

    def __init__(self, nl: Nonlinearity, m: int, beta: float):
        self.nl, self.m, self.beta = nl, m, beta
        self.ps = _pseudo(nl, m)
        self.lam = _lam_beta(m, beta)
        a, b, _, _, origin = _rep_index(m)
        self.lam_packed = np.concatenate(([self.lam[origin]], self.lam[a, b], self.lam[a, b]))
        self.n = real_dim(m)

    def G(self, x):
        c = unpack_real(x, self.m)
        ug = self.ps.to_grid(c)
        return pack_real(self.lam * c + self.ps.to_coeffs(self.ps.f(ug)), self.m), ug

    def jacobian(self, ug):
        fu = self.ps.f_u(ug)
        m, ps, lam = self.m, self.ps, self.lam

        def mv(y):
            c = unpack_real(np.ravel(y), m)
            return pack_real(lam * c + ps.to_coeffs(fu * ps.to_grid(c)), m)

        diag = np.abs(self.lam_packed) + float(np.mean(fu))
        A = spla.LinearOperator((self.n, self.n), matvec=mv, dtype=float)
        M = spla.LinearOperator((self.n, self.n), matvec=lambda y: np.ravel(y) / diag, dtype=float)
        return A, M


class _Deflation:
    """Multiplicative deflation tau(x) = prod_i (1 / d_i(x)^2 + 1).

    d_i is the orbit distance (coefficient l^2) to the i-th known solution;
    the gradient uses the aligned representative, which is exact at the
    optimal shift.
    """

    def __init__(self, nl: Nonlinearity, m: int, known):
        self.nl, self.m = nl, m
        self.known = [as_field(u) for u in known]
        self.space = _x_invariant(nl)

    def factor_and_log_grad(self, x):
        """tau(x) and grad(log tau)(x) in packed coordinates."""
        if not self.known:
            return 1.0, np.zeros_like(x)
        u = FourierField(unpack_real(x, self.m), self.m)
        tau = 1.0
        glog = np.zeros_like(x)
        for ref in self.known:
            if np.any(ref.coeffs):
                h1, th, _ = align_shifts(ref, u, space=self.space)
                ref = translate(ref, h1, th)
            diff = pack_real(u.coeffs - ref.coeffs, self.m)
            d2 = float(diff @ diff)
            d2 = max(d2, 1e-300)
            mi = 1.0 / d2 + 1.0
            tau *= mi
            glog += (-2.0 * diff / d2**2) / mi
        return tau, glog


def _newton(nl, x0, m, beta, max_iter, tol, known=()):
    """Damped Newton on tau(x) G(x); returns (x, ||G||, iterations)."""
    sys = _System(nl, m, beta)
    defl = _Deflation(nl, m, known)
    x = np.array(x0, float)
    g, ug = sys.G(x)
    gn = float(np.linalg.norm(g))
    best = (x.copy(), gn)
    for it in range(1, max_iter + 1):
        if gn <= tol:
            return x, gn, it - 1
        A, M = sys.jacobian(ug)
        eta = min(1e-2, max(gn, 1e-13))
        dx, _ = spla.minres(A, -g, rtol=eta, maxiter=10 * sys.n, M=M)
        tau, glog = defl.factor_and_log_grad(x)
        if defl.known:
            denom = 1.0 - float(glog @ dx)
            if abs(denom) > 1e-12:
                dx = dx / denom
        h_old = tau * gn
        lam = 1.0
        accepted = None
        trial = None
        while lam >= 2.0**-12:
            xt = x + lam * dx
            gt, ugt = sys.G(xt)
            gtn = float(np.linalg.norm(gt))
            ht = defl.factor_and_log_grad(xt)[0] * gtn if defl.known else gtn
            if trial is None or ht < trial[3]:
                trial = (xt, gt, ugt, ht, gtn)
            if np.isfinite(ht) and ht <= (1 - 1e-4 * lam) * h_old:
                accepted = (xt, gt, ugt, ht, gtn)
                break
            lam *= 0.5
        xt, gt, ugt, _, gtn = accepted or trial
        if not np.all(np.isfinite(xt)):
            break
        x, g, ug, gn = xt, gt, ugt, gtn
        if gn < best[1]:
            best = (x.copy(), gn)
    if gn <= tol:
        return x, gn, max_iter
    raise NonConvergenceError(
        f"Newton did not reach {tol:.1e} in {max_iter} iterations at beta={beta:g} (residual {best[1]:.3e})",
        best=FourierField(unpack_real(best[0], m), m),
        residual_norm=best[1],
        iterations=max_iter,
    )


def newton_solve(nl: Nonlinearity, d0, beta: float, sched: ContinuationSchedule, *, deflate=()) -> Decomposition:
    """Critical point of I_beta near ``d0``.

    Parameters
    ----------
    deflate : iterable of fields
        Known solutions to steer away from.  After the deflated iteration
        converges the iterate is polished by plain Newton.

    Raises
    ------
    NonConvergenceError
        If ``max_newton`` iterations do not bring ||residual||_{l^2} below
        ``tol_residual``; the exception carries the best iterate.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    u0 = as_field(d0)
    x0 = pack_real(u0.coeffs, u0.m)
    known = list(deflate)
    x, gn, _ = _newton(nl, x0, u0.m, beta, sched.max_newton, sched.tol_residual, known)
    if known:
        x, gn, _ = _newton(nl, x, u0.m, beta, sched.max_newton, sched.tol_residual)
    return decompose(FourierField(unpack_real(x, u0.m), u0.m))


def residual_norm(nl: Nonlinearity, d, beta: float) -> float:
    u = as_field(d)
    g, _ = _System(nl, u.m, beta).G(pack_real(u.coeffs, u.m))
    return float(np.linalg.norm(g))


# continuation -------------------------------------------------------------

TRACKED = ("v_c0", "v_t", "v_tt", "w_h1", "w_h2")


def tracked_norms(d: Decomposition) -> dict:
    v, w = d.v, d.w
    return {
        "v_c0": c0_norm(v),
        "v_t": time_derivative_l2(v, 1),
        "v_tt": time_derivative_l2(v, 2),
        "w_h1": hs_norm(w, 1),
        "w_h2": hs_norm(w, 2),
    }


def _sentinel(prev: dict, cur: dict, growth: float, floor: float):
    """Names of tracked quantities that grew by more than ``growth`` in one step.

    Values below ``floor`` count as numerical zero.
    """
    bad = []
    for key in TRACKED:
        a, b = prev[key], cur[key]
        if b <= floor:
            continue
        if b > growth * max(a, floor):
            bad.append(key)
    return bad


def _make_record(nl, d, beta, path, fields, seed, converged, status, res=None):
    return SolutionRecord(
        d=d,
        beta_final=beta,
        residual_norm=residual_norm(nl, d, beta) if res is None else res,
        I_value=functional_value(nl, d, beta),
        norm_report=norm_report(d, beta=beta),
        v_c0_history=[p["v_c0"] for p in path],
        seed_descriptor=dict(seed),
        path=path,
        path_fields=fields,
        converged=converged,
        status=status,
    )


def continue_beta(
    nl: Nonlinearity,
    seed,
    sched: ContinuationSchedule,
    *,
    seed_descriptor=None,
    deflate=(),
    sentinel_window: int = 3,
) -> SolutionRecord:
    """Solve at beta0 from ``seed`` and follow the branch down to beta_min.

    Each step warm-starts from the previous solution.  The path stops early,
    with ``converged=False``, when Newton fails or when a tracked norm grows
    faster than beta^(-1/4) over ``sentinel_window`` consecutive steps.  A
    single fast step is tolerated: bounded quantities such as the penalised
    mean -b0/(beta + alpha) move by O(1) factors while beta is still O(1).
    """
    seed_descriptor = seed_descriptor or {"kind": "given"}
    u = as_field(seed)
    growth = sched.factor ** -0.25
    streak = dict.fromkeys(TRACKED, 0)
    path, fields = [], []
    d = None
    for i, beta in enumerate(sched.betas()):
        try:
            start = u if d is None else d
            d = newton_solve(nl, start, beta, sched, deflate=deflate if i == 0 else ())
        except NonConvergenceError as exc:
            if d is None:
                best = decompose(exc.best)
                return _make_record(nl, best, beta, path, fields, seed_descriptor, False,
                                    f"no convergence at beta={beta:g}", exc.residual_norm)
            return _make_record(nl, d, path[-1]["beta"], path, fields, seed_descriptor, False,
                                f"no convergence at beta={beta:g}")
        cur = tracked_norms(d)
        cur["beta"] = beta
        if path:
            floor = 1e-8 * (1 + c0_norm(d.field()))
            fast = set(_sentinel(path[-1], cur, growth, floor))
            for key in TRACKED:
                streak[key] = streak[key] + 1 if key in fast else 0
            bad = [key for key in TRACKED if streak[key] >= sentinel_window]
            if bad:
                path.append(cur)
                fields.append(d.field())
                return _make_record(nl, d, beta, path, fields, seed_descriptor, False,
                                    f"blow-up sentinel at beta={beta:g}: {', '.join(bad)}")
        path.append(cur)
        fields.append(d.field())
    return _make_record(nl, d, sched.betas()[-1], path, fields, seed_descriptor, True, "converged")


# multi-start --------------------------------------------------------------

def theta_index(s: float) -> float:
    """Sobolev index with L^{s+1} controlled by E^theta: s(p) at p = s + 1."""
    return (s - 1) / s


def seed_amplitude(s: float, level: int, amp0: float = 1.0) -> float:
    """amp0 * level^((1 - theta)(s + 1)/(s - 1))."""
    th = theta_index(s)
    return amp0 * level ** ((1 - th) * (s + 1) / (s - 1))


def seed_modes(m: int, level: int) -> list[tuple[int, int]]:
    """Seed modes of dyadic level ``level - 1`` in the order E+, kernel, E-.

    Representatives have j >= 0 and k > 0 (k >= 0 for E-); within a class the
    order is by radius, then j.
    """
    from .norms import dyadic_levels

    j, k, ball = mode_indices(m)
    lev = dyadic_levels(m)
    masks = part_masks(m)
    out = []
    for part in ("Eplus", "kernel", "Eminus"):
        sel = masks[part] & (lev == level - 1) & (j >= 0) & ((k > 0) | ((k == 0) & (j > 0)))
        pts = sorted(zip(j[sel].tolist(), k[sel].tolist()), key=lambda p: (2 * p[0] + abs(p[1]), p[0]))
        out.extend(pts)
    return out


def _dedup(nl, records, rel):
    out = []
    scale = max([r.u.L2() for r in records] + [0.0])
    thr = rel * max(scale, 1e-300)
    for r in records:
        if all(orbit_distance(nl, r.u, o.u) > thr for o in out):
            out.append(r)
    return out


def multi_start(
    nl: Nonlinearity,
    sched: ContinuationSchedule,
    l_max: int,
    starts_per_level: int = 3,
    *,
    amp0: float = 1.0,
    dedup_rel: float = 1e-3,
    workers: int = 1,
) -> list[SolutionRecord]:
    """Find several branches by seeded, deflated Newton plus continuation.

    The zero seed is solved first.  Seeds of level l = 1..l_max are single
    cosine modes from ``seed_modes`` with amplitude ``seed_amplitude``; each
    is deflated against the solutions already found at beta0.  The distinct
    beta0 solutions are then continued to beta_min, converged records are
    deduplicated modulo symmetry, and the list is sorted by I_value.
    """
    if l_max < 1:
        raise DomainError("l_max must be >= 1")
    m, beta0 = sched.m, sched.beta0
    starts = [(FourierField.zeros(m), {"kind": "zero", "level": 0})]
    for level in range(1, l_max + 1):
        amp = seed_amplitude(nl.s, level, amp0)
        for j, k in seed_modes(m, level)[:starts_per_level]:
            starts.append((FourierField.cosine(j, k, amp, m), {"kind": "mode", "level": level, "mode": [j, k], "amplitude": amp}))

    found, descs = [], []
    for u0, desc in starts:
        try:
            d = newton_solve(nl, u0, beta0, sched, deflate=found)
        except NonConvergenceError as exc:
            log.info("seed %s: %s", desc, exc)
            continue
        u = d.field()
        thr = dedup_rel * max(u.L2(), *(f.L2() for f in found), 1e-300)
        if any(orbit_distance(nl, u, f) <= thr for f in found):
            continue
        found.append(u)
        descs.append(desc)

    jobs = list(zip(found, descs))
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as ex:
            records = list(ex.map(_continue_job, [(nl, sched, u, desc) for u, desc in jobs]))
    else:
        records = [_continue_job((nl, sched, u, desc)) for u, desc in jobs]
    good = [r for r in records if r.converged]
    good = _dedup(nl, good, dedup_rel)
    good.sort(key=lambda r: (r.I_value, r.seed_descriptor.get("level", 0)))
    return good


def _continue_job(args):
    nl, sched, u, desc = args
    return continue_beta(nl, u, sched, seed_descriptor=desc)


def level_monotonicity(records) -> bool:
    """Whether I_value is nondecreasing in seed level (reported, not asserted)."""
    pairs = sorted((r.seed_descriptor.get("level", 0), r.I_value) for r in records)
    return all(b[1] >= a[1] - 1e-12 for a, b in zip(pairs, pairs[1:]))
