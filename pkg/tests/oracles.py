"""Independent reference computations used as test oracles.

Nothing here goes through the package's FFT machinery: fields are built from
explicit cos/sin basis functions and integrals are plain quadrature sums.
"""
import numpy as np

Q_AREA = 2 * np.pi**2


def direct_coeffs(values, modes):
    """Mean-normalised Fourier amplitudes by a double loop over grid points."""
    nx, nt = values.shape
    x = np.pi * np.arange(nx) / nx
    t = 2 * np.pi * np.arange(nt) / nt
    out = {}
    for j, k in modes:
        acc = 0j
        for a in range(nx):
            acc += np.sum(values[a] * np.exp(-1j * (2 * j * x[a] + k * t)))
        out[(j, k)] = acc / (nx * nt)
    return out


def direct_synthesis(coeffs: dict, nx, nt):
    x = np.pi * np.arange(nx)[:, None] / nx
    t = 2 * np.pi * np.arange(nt)[None, :] / nt
    u = np.zeros((nx, nt), complex)
    for (j, k), c in coeffs.items():
        u += c * np.exp(1j * (2 * j * x + k * t))
    return u


class DenseGalerkin:
    """Real cos/sin Galerkin system for the penalised cubic problem.

    Unknowns a_i multiply the basis 1, cos(2jx + kt), sin(2jx + kt) over
    representatives (j > 0, or j = 0 and k > 0) of the ball 2|j| + |k| <= m.
    The stationarity equations of the penalised action are assembled by
    quadrature and solved by dense Newton.
    """

    def __init__(self, m, s=3.0, alpha=0.5, a=1.0, beta=1.0, nx=64, nt=128):
        self.m, self.s, self.alpha, self.a, self.beta = m, s, alpha, a, beta
        x = np.pi * np.arange(nx) / nx
        t = 2 * np.pi * np.arange(nt) / nt
        X, T = np.meshgrid(x, t, indexing="ij")
        self.w = Q_AREA / (nx * nt)
        reps = [(j, k) for j in range(0, m // 2 + 1) for k in range(-m, m + 1)
                if 2 * j + abs(k) <= m and (j > 0 or k > 0)]
        self.labels = [("1", 0, 0)]
        phi, phit, phix, kern = [np.ones_like(X)], [np.zeros_like(X)], [np.zeros_like(X)], [True]
        for j, k in reps:
            th = 2 * j * X + k * T
            for kind, f, df in (("c", np.cos(th), -np.sin(th)), ("s", np.sin(th), np.cos(th))):
                self.labels.append((kind, j, k))
                phi.append(f)
                phit.append(k * df)
                phix.append(2 * j * df)
                kern.append(abs(k) == 2 * j)
        self.phi = np.array([p.ravel() for p in phi])
        self.phit = np.array([p.ravel() for p in phit])
        self.phix = np.array([p.ravel() for p in phix])
        self.kern = np.array(kern)
        w = self.w
        wave = w * (self.phit @ self.phit.T - self.phix @ self.phix.T)
        K = np.diag(self.kern.astype(float))
        pen = w * K @ (self.phi @ self.phi.T + self.phit @ self.phit.T) @ K
        self.L = wave - self.beta * pen

    def f(self, u):
        return self.a * np.abs(u) ** (self.s - 1) * u + self.alpha * u

    def fu(self, u):
        return self.s * self.a * np.abs(u) ** (self.s - 1) + self.alpha

    def residual(self, coef):
        u = coef @ self.phi
        return self.L @ coef - self.w * self.phi @ self.f(u)

    def jacobian(self, coef):
        u = coef @ self.phi
        return self.L - self.w * (self.phi * self.fu(u)) @ self.phi.T

    def solve(self, coef, tol=1e-13, max_iter=60):
        coef = np.array(coef, float)
        for _ in range(max_iter):
            r = self.residual(coef)
            if np.linalg.norm(r) < tol:
                break
            step = np.linalg.lstsq(self.jacobian(coef), -r, rcond=None)[0]
            lam = 1.0
            while lam > 1e-4 and np.linalg.norm(self.residual(coef + lam * step)) > (1 - 1e-4 * lam) * np.linalg.norm(r):
                lam /= 2
            coef = coef + lam * step
        return coef

    def from_modes(self, modes: dict):
        """Real coefficients from complex amplitudes {(j, k): c} (with conjugates)."""
        coef = np.zeros(len(self.labels))
        for i, (kind, j, k) in enumerate(self.labels):
            c = modes.get((j, k), 0j)
            if kind == "1":
                coef[i] = c.real
            elif kind == "c":
                coef[i] = 2 * c.real
            else:
                coef[i] = -2 * c.imag
        return coef

    def to_modes(self, coef) -> dict:
        out = {}
        for i, (kind, j, k) in enumerate(self.labels):
            if kind == "1":
                out[(0, 0)] = out.get((0, 0), 0) + coef[i]
            elif kind == "c":
                out[(j, k)] = out.get((j, k), 0) + coef[i] / 2
            else:
                out[(j, k)] = out.get((j, k), 0) - 1j * coef[i] / 2
        for (j, k), c in list(out.items()):
            if (j, k) != (0, 0):
                out[(-j, -k)] = np.conj(c)
        return out
