import numpy as np
import pytest
from hypothesis import given

from boxtorus.errors import CharacteristicDataError, DomainError, RealnessError, TruncationError
from boxtorus.lattice import (
    PARTS,
    QUADRANTS,
    Q_AREA,
    FourierField,
    GridField,
    ModeIndex,
    analyze,
    check_kernel_free,
    decompose,
    from_csv,
    grid_shape,
    kernel_field,
    kernel_profiles,
    mode_indices,
    pack_real,
    profiles_to_field,
    project,
    quadrant,
    random_field,
    real_dim,
    synthesize,
    to_csv,
    translate,
    truncate,
    unpack_real,
)
from boxtorus.norms import hs_norm_bare

from conftest import field_from_seed, seeds
from oracles import direct_coeffs, direct_synthesis


def grid_of(func, nx=16, nt=32):
    return GridField.from_function(func, nx, nt)


class TestModeIndex:
    def test_classification(self):
        assert ModeIndex(1, 2).kind == "kernel"
        assert ModeIndex(1, -2).kind == "kernel"
        assert ModeIndex(0, 0).kind == "kernel"
        assert ModeIndex(0, 3).kind == "Eplus"
        assert ModeIndex(2, 1).kind == "Eminus"
        assert ModeIndex(-2, 3).radius == 7

    def test_ball_size(self):
        for m in (4, 16, 64):
            assert mode_indices(m)[2].sum() == 1 + m * (m + 1)


class TestAnalyze:
    def test_cos2x(self):
        u = analyze(grid_of(lambda x, t: np.cos(2 * x)), 8)
        assert u[1, 0] == pytest.approx(0.5)
        assert u[-1, 0] == pytest.approx(0.5)
        rest = np.abs(u.coeffs).sum() - 1.0
        assert abs(rest) < 1e-14

    def test_zero(self):
        assert not np.any(analyze(grid_of(lambda x, t: 0 * x), 8).coeffs)

    def test_sin_t(self):
        u = analyze(grid_of(lambda x, t: np.sin(t)), 8)
        assert abs(u[0, 1] - (-0.5j)) < 1e-15
        assert abs(u[0, -1] - 0.5j) < 1e-15

    def test_grid_too_small(self):
        with pytest.raises(TruncationError):
            analyze(GridField(np.zeros((4, 8))), 8)

    def test_matches_direct_sum(self, rng):
        vals = rng.standard_normal((8, 16))
        u = analyze(GridField(vals), 4)
        ref = direct_coeffs(vals, [(j, k) for (j, k), _ in u.modes()][:10])
        for jk, c in ref.items():
            assert abs(u[jk] - c) < 1e-14


class TestSynthesize:
    def test_cos_2x_2t(self):
        u = FourierField.from_modes({(1, 2): 0.5, (-1, -2): 0.5}, 4)
        g = synthesize(u, 8, 16)
        X, T = np.meshgrid(g.x, g.t, indexing="ij")
        assert np.allclose(g.values, np.cos(2 * X + 2 * T), atol=1e-14)

    def test_empty(self):
        assert synthesize(FourierField.zeros(4)).sup() == 0

    def test_rejects_nonreal(self):
        with pytest.raises(RealnessError):
            synthesize(FourierField.from_modes({(1, 0): 1.0}, 4))

    def test_round_trip_random(self, rng):
        for _ in range(50):
            u = random_field(16, rng, kernel_free=False)
            back = analyze(synthesize(u), 16)
            assert (back - u).l2() < 1e-13 * max(u.l2(), 1)

    def test_matches_direct_synthesis(self, rng):
        u = random_field(6, rng, kernel_free=False)
        g = synthesize(u, 8, 16)
        ref = direct_synthesis(dict(u.modes()), 8, 16)
        assert np.max(np.abs(g.values - ref.real)) < 1e-13
        assert np.max(np.abs(ref.imag)) < 1e-13

    @given(seeds)
    def test_parseval(self, seed):
        u = field_from_seed(seed, m=8)
        g = synthesize(u, refine=2)
        quad = np.mean(g.values**2) * Q_AREA
        assert quad == pytest.approx(Q_AREA * u.l2() ** 2, rel=1e-10)


class TestFourierField:
    def test_outside_ball_rejected(self):
        with pytest.raises(TruncationError):
            FourierField.from_modes({(2, 1): 1.0}, 4)

    def test_cosine_constructor(self):
        u = FourierField.cosine(1, 3, 2.0, 8)
        assert u[1, 3] == pytest.approx(1.0)
        assert u[-1, -3] == pytest.approx(1.0)
        assert u.is_real()

    def test_truncate_zero_pads(self, rng):
        u = random_field(8, rng)
        assert truncate(truncate(u, 16), 8).l2() == pytest.approx(u.l2())

    def test_grid_shape_valid(self):
        for m in (1, 4, 16, 64):
            nx, nt = grid_shape(m)
            assert nx > 2 * (m // 2) and nt > 2 * m


class TestProject:
    def test_kernel_and_eminus(self):
        u = FourierField.from_modes({(1, 2): 0.5, (2, 1): 0.5}, 8, hermitian=True)
        ker = project(u, "kernel")
        assert sorted(jk for jk, _ in ker.modes()) == [(-1, -2), (1, 2)]
        em = project(u, "Eminus")
        assert sorted(jk for jk, _ in em.modes()) == [(-2, -1), (2, 1)]

    def test_partition(self, rng):
        for _ in range(100):
            u = random_field(8, rng, kernel_free=False)
            total = sum((project(u, p) for p in PARTS), FourierField.zeros(8))
            assert (total - u).l2() == 0

    @given(seeds)
    def test_idempotent_and_orthogonal(self, seed):
        u = field_from_seed(seed)
        for p in PARTS:
            assert (project(project(u, p), p) - project(u, p)).l2() == 0
            for q in PARTS:
                if q != p:
                    assert project(u, p).inner(project(u, q)) == 0

    def test_unknown_part(self):
        with pytest.raises(DomainError):
            project(FourierField.zeros(4), "Ezero")


class TestKernelProfiles:
    def test_right_moving_cosine(self):
        v = FourierField.from_modes({(1, 2): 0.5, (-1, -2): 0.5}, 8)
        p1, p2 = kernel_profiles(v)
        J = 2
        assert p1[J + 1] == pytest.approx(0.5) and p1[J - 1] == pytest.approx(0.5)
        assert not np.any(p2)

    def test_constant(self):
        p1, p2 = kernel_profiles(FourierField.from_modes({(0, 0): 3.0}, 8))
        assert not np.any(p1)
        assert p2[2] == 3.0

    def test_rejects_off_kernel(self):
        with pytest.raises(DomainError):
            kernel_profiles(FourierField.cosine(0, 1, 1.0, 8))

    def test_resynthesis(self, rng):
        v = kernel_field(random_field(12, rng, kernel_free=False))
        p1, p2 = kernel_profiles(v)
        Jk = 3
        g = synthesize(v, 16, 32)
        X, T = np.meshgrid(g.x, g.t, indexing="ij")
        ref = np.zeros_like(X, complex)
        for i, j in enumerate(range(-Jk, Jk + 1)):
            ref += p1[i] * np.exp(2j * j * (X + T)) + p2[i] * np.exp(2j * j * (X - T))
        assert np.max(np.abs(g.values - ref)) < 1e-13
        assert (profiles_to_field(p1, p2, 12) - v).l2() == 0

    @given(seeds)
    def test_decomposition_reassembles(self, seed):
        u = field_from_seed(seed, m=10)
        d = decompose(u)
        assert (d.field() - u).l2() < 1e-15
        assert d.p1[len(d.p1) // 2] == 0
        assert d.mean == pytest.approx(u[0, 0].real)


class TestTranslate:
    def test_identity(self, rng):
        u = random_field(8, rng)
        assert (translate(u, 0, 0) - u).l2() == 0

    def test_quarter_shift(self):
        u = translate(FourierField.cosine(1, 0, 1.0, 4), np.pi / 4, 0)
        assert abs(u[1, 0] - np.exp(1j * np.pi / 2) / 2) < 1e-15

    @given(seeds)
    def test_isometry_and_group(self, seed):
        u = field_from_seed(seed)
        assert translate(u, 0.7, 0.7).L2() == pytest.approx(u.L2())
        lhs = translate(translate(u, 0.3, 1.1), 0.5, -0.4)
        assert (lhs - translate(u, 0.8, 0.7)).l2() < 1e-14


class TestQuadrant:
    def test_single_cosine(self):
        u = FourierField.cosine(1, 1, 2.0, 4)
        assert [jk for jk, _ in quadrant(u, "++").modes()] == [(1, 1)]
        assert [jk for jk, _ in quadrant(u, "--").modes()] == [(-1, -1)]

    @given(seeds)
    def test_partition_and_norm_split(self, seed):
        u = field_from_seed(seed)
        parts = [quadrant(u, q) for q in QUADRANTS]
        assert (sum(parts, FourierField.zeros(u.m)) - u).l2() == 0
        total = sum(hs_norm_bare(p, 0.4) ** 2 for p in parts)
        assert total == pytest.approx(hs_norm_bare(u, 0.4) ** 2, rel=1e-13)


class TestPacking:
    @given(seeds)
    def test_isometric_round_trip(self, seed):
        u = field_from_seed(seed, m=9)
        x = pack_real(u.coeffs, 9)
        assert len(x) == real_dim(9) == 1 + 9 * 10
        assert np.linalg.norm(x) == pytest.approx(u.l2())
        assert np.max(np.abs(unpack_real(x, 9) - u.coeffs)) < 1e-15


class TestCsv:
    @given(seeds)
    def test_round_trip_exact(self, seed):
        u = field_from_seed(seed, m=6)
        back = from_csv(to_csv(u))
        assert back.m == 6
        assert np.array_equal(back.coeffs, u.coeffs)

    def test_rows_sorted(self, rng):
        rows = to_csv(random_field(4, rng)).splitlines()[1:]
        keys = [tuple(int(v) for v in r.split(",")[:2]) for r in rows]
        assert keys == sorted(keys)


def test_check_kernel_free():
    u = FourierField.cosine(1, 2, 1.0, 4)
    with pytest.raises(CharacteristicDataError):
        check_kernel_free(u)
    tiny = FourierField.cosine(0, 1, 1.0, 4) + FourierField.cosine(1, 2, 1e-16, 4)
    assert not np.any(project(check_kernel_free(tiny), "kernel").coeffs)
