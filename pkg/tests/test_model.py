import numpy as np
import pytest
from hypothesis import given, strategies as st

from boxtorus.errors import DomainError
from boxtorus.lattice import Q_AREA, FourierField, GridField, decompose, random_field, translate, synthesize
from boxtorus.model import (
    F_eval,
    Nonlinearity,
    energy_identity,
    f_eval,
    f_field,
    f_prime_eval,
    functional_value,
    pairing,
    padded_shape,
    residual,
)

from conftest import field_from_seed, seeds

CUBIC = Nonlinearity(s=3, alpha=0.5)
VARIABLE = Nonlinearity(s=3, alpha=0.5, a_coeffs=(1.0, 0.3), b_coeffs=(0.2, -0.1))


class TestNonlinearity:
    def test_pointwise_cubic(self):
        nl = Nonlinearity(s=3, alpha=0.0)
        g = f_eval(nl, GridField(2 * np.ones((4, 8))))
        assert np.all(g.values == 8)

    def test_zero(self):
        assert not np.any(f_eval(CUBIC, GridField(np.zeros((4, 8)))).values)

    @given(seeds)
    def test_odd(self, seed):
        vals = np.random.default_rng(seed).standard_normal((8, 16))
        nl = Nonlinearity(s=2.5, alpha=0.3, a_coeffs=(1.0, 0.2))
        assert np.allclose(f_eval(nl, GridField(-vals)).values, -f_eval(nl, GridField(vals)).values)

    def test_antiderivative(self, rng):
        vals = rng.standard_normal((8, 16))
        h = 1e-6
        dF = (F_eval(VARIABLE, GridField(vals + h)).values - F_eval(VARIABLE, GridField(vals - h)).values) / (2 * h)
        assert np.allclose(dF, f_eval(VARIABLE, GridField(vals)).values, atol=1e-8)

    def test_monotone_floor(self, rng):
        vals = rng.standard_normal((8, 16)) * 3
        assert np.all(f_prime_eval(VARIABLE, GridField(vals)).values >= VARIABLE.alpha)

    def test_admissibility(self):
        with pytest.raises(DomainError):
            Nonlinearity(s=3, a_coeffs=(1.0, 0.9))  # min a = 0.1 too small
        with pytest.raises(DomainError):
            Nonlinearity(s=3, a_coeffs=(1.0, 1.2))  # a changes sign
        with pytest.raises(DomainError):
            Nonlinearity(s=1.0)
        with pytest.raises(DomainError):
            Nonlinearity(alpha=-1.0)
        assert Nonlinearity(a_coeffs=(0.0,)).is_linear

    @given(st.floats(1.5, 5), st.floats(0, 2), st.floats(-0.4, 0.4), st.floats(-1, 1))
    def test_envelope(self, s, alpha, a1, b1):
        nl = Nonlinearity(s=s, alpha=alpha, a_coeffs=(1.0, a1 / s), b_coeffs=(0.3, b1))
        env = nl.envelope()
        x = np.linspace(0, np.pi, 33)[:, None]
        u = np.linspace(-6, 6, 801)[None, :]
        sf = np.sign(u) * nl.f(x, u)
        au = np.abs(u) ** s
        assert np.all(sf >= env["c0_lower"] * au + env["c1"] - 1e-12)
        assert np.all(sf <= env["c0_upper"] * au + env["c2"] + 1e-12)
        assert env["c0_lower"] > env["c0_upper"] / (s + 1)

    @given(st.floats(1.5, 5), st.floats(-1, 1))
    def test_energy_bound_constants(self, s, b1):
        nl = Nonlinearity(s=s, alpha=0.5, a_coeffs=(1.0,), b_coeffs=(0.2, b1))
        a1, a2 = nl.energy_bound_constants()
        x = np.linspace(0, np.pi, 33)[:, None]
        u = np.linspace(-5, 5, 1001)[None, :]
        density = 0.5 * u * nl.f(x, u) - nl.F(x, u)
        assert np.all(density >= a1 * np.abs(u) ** (s + 1) - a2 / Q_AREA - 1e-12)


class TestFField:
    def test_trig_identity(self):
        u = FourierField.cosine(1, 0, 1.0, 8)
        fh = f_field(CUBIC, u)
        assert fh[1, 0] == pytest.approx(3 / 8 + 0.25)
        assert fh[3, 0] == pytest.approx(1 / 8)
        assert fh[-3, 0] == pytest.approx(1 / 8)

    def test_zero(self):
        assert f_field(CUBIC, FourierField.zeros(8)).l2() == 0

    @given(seeds)
    def test_padding_exact_for_integer_s(self, seed):
        u = field_from_seed(seed, m=10)
        for nl in (CUBIC, VARIABLE, Nonlinearity(s=5, alpha=0.1)):
            assert (f_field(nl, u) - f_field(nl, u, factor=2)).l2() < 1e-12 * (1 + f_field(nl, u).l2())

    def test_padded_shape_covers_products(self):
        nx, nt = padded_shape(CUBIC, 16)
        assert nx >= 4 * 8 + 1 and nt >= 4 * 16 + 1

    @given(seeds, st.floats(0, np.pi), st.floats(0, 2 * np.pi))
    def test_commutes_with_shifts(self, seed, h1, h2):
        u = field_from_seed(seed)
        a = f_field(CUBIC, translate(u, h1, h2))
        b = translate(f_field(CUBIC, u), h1, h2)
        assert (a - b).l2() < 1e-13 * (1 + a.l2())


class TestFunctional:
    def test_zero(self):
        assert functional_value(CUBIC, FourierField.zeros(8), 1.0) == 0

    def test_single_eplus_mode(self):
        a = 0.7
        u = FourierField.cosine(0, 1, a, 8)
        g = synthesize(u, 64, 64)
        quad = Q_AREA * np.mean(g.values**4 / 4 + 0.25 * g.values**2)
        quadratic = 0.5 * Q_AREA * 2 * (a / 2) ** 2
        assert functional_value(CUBIC, u, 1.0) == pytest.approx(quadratic - quad, rel=1e-13)

    def test_decreasing_in_beta(self, rng):
        d = decompose(random_field(8, rng, kernel_free=False))
        vals = [functional_value(CUBIC, d, b) for b in (0.1, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestResidual:
    def test_zero(self):
        r = residual(CUBIC, FourierField.zeros(8), 1.0)
        assert r.norm() == 0

    def test_beta_domain(self):
        with pytest.raises(DomainError):
            residual(CUBIC, FourierField.zeros(4), 0.0)

    def test_disjoint_parts(self, rng):
        r = residual(VARIABLE, random_field(8, rng, kernel_free=False), 0.5)
        assert np.all((r.range_part.coeffs == 0) | (r.kernel_part.coeffs == 0))

    def test_linear_single_mode(self):
        nl = Nonlinearity(a_coeffs=(0.0,), alpha=0.5)
        v = FourierField.cosine(1, 2, 0.3, 8)
        r = residual(nl, v, 0.2)
        # beta (1 + k^2) v + alpha v on the kernel mode: nonzero unless v = 0
        assert r.kernel_part[1, 2] == pytest.approx((0.2 * 5 + 0.5) * 0.15)
        assert r.range_part.l2() < 1e-15

    def test_gradient_consistency(self, rng):
        u = random_field(8, rng, kernel_free=False)
        phi = random_field(8, rng, kernel_free=False)
        beta = 0.3
        an = -pairing(residual(VARIABLE, u, beta), phi)
        errs = []
        steps = [1e-2, 1e-3]
        for e in steps:
            fd = (functional_value(VARIABLE, u + e * phi, beta) - functional_value(VARIABLE, u - e * phi, beta)) / (2 * e)
            errs.append(abs(fd - an))
        assert np.log10(errs[0] / errs[1]) == pytest.approx(2, abs=0.1)

    @given(seeds, st.floats(0, 2 * np.pi))
    def test_time_equivariance(self, seed, th):
        u = field_from_seed(seed)
        a = residual(VARIABLE, translate(u, 0, th), 0.7).as_field()
        b = translate(residual(VARIABLE, u, 0.7).as_field(), 0, th)
        assert (a - b).l2() < 1e-12 * (1 + a.l2())


class TestEnergyIdentity:
    def test_zero(self):
        assert energy_identity(CUBIC, FourierField.zeros(8), 1.0) == (0.0, 0.0, 0.0)

    def test_cos2x(self):
        nl = Nonlinearity(s=3, alpha=0.0)
        _, rhs, _ = energy_identity(nl, FourierField.cosine(1, 0, 1.0, 8), 1.0)
        assert rhs == pytest.approx(3 * np.pi**2 / 16)

    def test_random(self, rng):
        for _ in range(100):
            u = random_field(8, rng, kernel_free=False)
            lhs, _, gap = energy_identity(VARIABLE, u, float(rng.uniform(0.01, 2)))
            assert gap < 1e-10 * (1 + abs(lhs))
