import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from novikov_besov.littlewood_paley import (
    BesovIndex,
    ResolutionWarning,
    aggregate,
    besov_norm,
    block_profile,
    dyadic_block,
    j_max,
    low_cutoff,
    smooth_step,
)
from novikov_besov.sequences import SequenceParams, f_seq, g_seq, grid_for
from novikov_besov.spectral import Field, lp_norm, make_grid, to_physical

TWO_PI = 2 * np.pi


def band_field(rng, grid, lo, hi):
    """Random real field with spectrum on ``lo <= |xi| <= hi``."""
    spec = np.fft.fft(rng.normal(size=grid.N))
    a = np.abs(grid.xi)
    spec[(a < lo) | (a > hi)] = 0
    return Field(grid, np.fft.ifft(spec).real)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestSmoothStep:
    def test_endpoints(self):
        assert smooth_step(0.0) == 0.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(-3.0) == 0.0
        assert smooth_step(7.0) == 1.0
        assert smooth_step(0.5) == pytest.approx(0.5)

    def test_monotone_and_symmetric(self):
        t = np.linspace(0, 1, 1001)
        s = smooth_step(t)
        assert np.all(np.diff(s) >= 0)
        assert np.allclose(s + smooth_step(1 - t), 1.0, atol=1e-15)


class TestPartition:
    def test_examples(self, partition):
        assert partition.chi(0.0) == 1.0
        assert partition.chi(2.0) == 0.0
        assert partition.phi(17 / 12) == 1.0

    def test_supports(self, partition):
        xi = np.linspace(0, 6, 60001)
        chi, phi = partition.chi(xi), partition.phi(xi)
        assert np.all(chi[xi >= 4 / 3] == 0)
        assert np.all(chi[xi <= 3 / 4] == 1)
        assert np.all(phi[(xi <= 3 / 4) | (xi >= 8 / 3)] == 0)
        assert np.all(phi[(xi >= 4 / 3) & (xi <= 1.5)] == 1)
        assert np.all((phi >= 0) & (phi <= 1))
        assert np.all((chi >= 0) & (chi <= 1))

    def test_radial(self, partition):
        xi = np.linspace(0, 5, 101)
        assert np.array_equal(partition.phi(xi), partition.phi(-xi))
        assert np.array_equal(partition.chi(xi), partition.chi(-xi))

    def test_unity(self, partition, rng):
        xi = rng.uniform(0, 1e5, 1000)
        total = partition.chi(xi) + sum(partition.phi(xi / 2.0**j) for j in range(21))
        assert np.max(np.abs(total - 1)) < 1e-10

    @pytest.mark.parametrize("j,jp", [(0, 2), (1, 3), (0, 5), (4, 7)])
    def test_disjoint_when_far(self, partition, j, jp):
        xi = np.linspace(0, 2 ** (jp + 2), 200001)
        assert not np.any(partition.block_symbol(j, xi) * partition.block_symbol(jp, xi))

    def test_low_block_disjoint_from_j1(self, partition):
        xi = np.linspace(0, 10, 100001)
        assert not np.any(partition.chi(xi) * partition.block_symbol(1, xi))

    def test_negative_blocks_vanish(self, partition):
        assert not np.any(partition.block_symbol(-2, np.linspace(0, 3, 31)))


class TestBesovIndex:
    def test_threshold(self):
        assert BesovIndex(2, 2, 2).threshold == 1.5
        assert BesovIndex(2, 1, 2).threshold == 2.0
        assert BesovIndex(2, np.inf, 1).threshold == 1.5

    def test_admissible(self):
        assert BesovIndex(2, 2, 2).admissible
        assert not BesovIndex(1.5, 2, 2).admissible
        assert not BesovIndex(2, 1, 2).admissible

    @pytest.mark.parametrize("p,r", [(0.5, 2), (2, 0), (np.nan, 2)])
    def test_invalid(self, p, r):
        with pytest.raises(ValueError):
            BesovIndex(2, p, r)


class TestJMax:
    def test_values(self):
        assert j_max(make_grid(TWO_PI, 64)) == 5   # xi_max 32, 0.75*32 = 24 <= 32 < 48
        assert j_max(grid_for(8)) == 11            # xi_max = 2048


class TestBlocks:
    def test_constant_in_low_block(self, partition):
        g = make_grid(TWO_PI, 64)
        c = Field(g, 3.0 * np.ones(64))
        assert np.allclose(dyadic_block(c, -1, partition).samples, 3.0, atol=1e-14)
        for j in range(0, 5):
            assert np.max(np.abs(dyadic_block(c, j, partition).samples)) < 1e-14
        assert not np.any(dyadic_block(c, -3, partition).samples)

    def test_tone_in_plateau(self, partition):
        # 17/12 * 2^j sits where phi(2^-j .) = 1
        g = make_grid(12 * TWO_PI, 512)
        j = 2
        f = Field.from_function(g, lambda x: np.cos(17 / 12 * 2**j * x))
        assert rel(dyadic_block(f, j, partition).samples, f.samples) < 1e-13

    def test_completeness(self, partition, rng):
        g = make_grid(30.0, 512)
        jm = j_max(g)
        f = band_field(rng, g, 0, 0.75 * 2**jm * 0.999)
        total = sum(dyadic_block(f, j, partition).samples for j in range(-1, jm + 1))
        assert rel(total, f.samples) < 1e-10

    def test_almost_orthogonality(self, partition, rng):
        g = make_grid(30.0, 512)
        f = Field(g, rng.normal(size=g.N))
        nf = lp_norm(f, 2)
        for j in range(-1, j_max(g) + 1):
            for jp in range(j + 2, j_max(g) + 1):
                b = dyadic_block(dyadic_block(f, j, partition), jp, partition)
                assert lp_norm(b, 2) < 1e-12 * nf

    def test_linearity(self, partition, rng):
        g = make_grid(10.0, 128)
        f, h = Field(g, rng.normal(size=128)), Field(g, rng.normal(size=128))
        lhs = dyadic_block(2 * f - 3 * h, 2, partition).samples
        rhs = 2 * dyadic_block(f, 2, partition).samples - 3 * dyadic_block(h, 2, partition).samples
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestLowCutoff:
    def test_s0_is_low_block(self, partition, rng):
        g = make_grid(20.0, 256)
        f = Field(g, rng.normal(size=256))
        assert np.allclose(low_cutoff(f, 0, partition).samples,
                           dyadic_block(f, -1, partition).samples, atol=1e-14)

    def test_negative_is_zero(self, partition, rng):
        g = make_grid(20.0, 256)
        assert not np.any(low_cutoff(Field(g, rng.normal(size=256)), -1, partition).samples)

    def test_recovers_bandlimited(self, partition, rng):
        g = make_grid(30.0, 512)
        edge = 5.0
        f = band_field(rng, g, 0, edge)
        j = int(np.ceil(np.log2(edge / 0.75))) + 1
        assert 0.75 * 2 ** (j - 1) > edge
        assert rel(low_cutoff(f, j, partition).samples, f.samples) < 1e-12

    @pytest.mark.parametrize("n", [3, 5])
    def test_annihilates_fn(self, partition, idx22, n):
        f = f_seq(SequenceParams.default(n, idx22))
        assert lp_norm(low_cutoff(f, n, partition), 2) < 1e-12 * lp_norm(f, 2)


class TestAggregate:
    def test_values(self):
        assert aggregate([3, 4], 2) == pytest.approx(5)
        assert aggregate([3, -4], 1) == pytest.approx(7)
        assert aggregate([3, -4], np.inf) == 4
        assert aggregate([], 2) == 0.0
        assert aggregate([0, 0], 2) == 0.0

    def test_no_overflow(self):
        assert aggregate([1e200, 1e200], 2) == pytest.approx(np.sqrt(2) * 1e200)


class TestBesovNorm:
    @pytest.mark.parametrize("r", [1, 2, np.inf])
    def test_single_block(self, partition, r):
        g = make_grid(12 * TWO_PI, 512)
        j, s = 3, 1.7
        f = Field.from_function(g, lambda x: np.sin(17 / 12 * 2**j * x))
        idx = BesovIndex(s, 2, r)
        assert besov_norm(f, idx, partition) == pytest.approx(2 ** (j * s) * lp_norm(f, 2), rel=1e-12)

    def test_l2_equivalence_sharp_constants(self, partition, rng):
        # sum_j phi_j^2 lies in [1/2, 1], so ||u||_{B^0_{2,2}} / ||u||_2 lies in [1/sqrt2, 1]
        g = make_grid(TWO_PI, 512)
        idx = BesovIndex(0, 2, 2)
        for frac in (0.1, 0.25, 0.5):
            for _ in range(5):
                f = band_field(rng, g, 0, frac * g.xi_max)
                ratio = besov_norm(f, idx, partition) / lp_norm(f, 2)
                assert 2**-0.5 - 1e-12 <= ratio <= 1 + 1e-12

    def test_l2_equivalence_on_plateau_tones(self, partition, rng):
        # fields whose spectrum sits on the phi = 1 plateaus match L2 within 5%
        g = make_grid(12 * TWO_PI, 1024)
        idx = BesovIndex(0, 2, 2)
        for _ in range(5):
            c = rng.normal(size=(5, 2))
            f = Field.from_function(g, lambda x: sum(
                c[j, 0] * np.cos(17 / 12 * 2**j * x) + c[j, 1] * np.sin(17 / 12 * 2**j * x)
                for j in range(5)))
            assert besov_norm(f, idx, partition) == pytest.approx(lp_norm(f, 2), rel=0.05)

    @settings(max_examples=25, deadline=None)
    @given(s1=st.floats(-2, 4), ds=st.floats(0, 3), seed=st.integers(0, 2**32 - 1),
           r=st.sampled_from([1.0, 2.0, np.inf]))
    def test_monotone_in_s_without_low_block(self, s1, ds, seed, r):
        # weights 2^{js} grow with s for j >= 0; the j = -1 block is excluded
        g = make_grid(20.0, 256)
        f = band_field(np.random.default_rng(seed), g, 4 / 3, 0.5 * g.xi_max)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            a = besov_norm(f, BesovIndex(s1, 2, r))
            b = besov_norm(f, BesovIndex(s1 + ds, 2, r))
        assert b >= a * (1 - 1e-12)

    def test_low_block_weight_decreases_with_s(self, partition):
        g = make_grid(TWO_PI, 64)
        c = Field(g, np.ones(64))
        a = besov_norm(c, BesovIndex(0, 2, 2), partition)
        b = besov_norm(c, BesovIndex(1, 2, 2), partition)
        assert b == pytest.approx(a / 2)

    def test_resolution_warning(self, partition):
        g = make_grid(TWO_PI, 64)
        f = Field.from_function(g, lambda x: np.cos(31 * x))
        with pytest.warns(ResolutionWarning):
            besov_norm(f, BesovIndex(2, 2, 2), partition)

    def test_no_warning_when_resolved(self, partition):
        g = make_grid(TWO_PI, 64)
        f = Field.from_function(g, lambda x: np.cos(3 * x))
        with warnings.catch_warnings():
            warnings.simplefilter("error", ResolutionWarning)
            besov_norm(f, BesovIndex(2, 2, 2), partition)

    @pytest.mark.parametrize("p", [1, 4, np.inf])
    def test_other_p(self, partition, p):
        g = make_grid(12 * TWO_PI, 512)
        f = Field.from_function(g, lambda x: np.sin(17 / 12 * 8 * x))
        idx = BesovIndex(2, p, 2)
        assert besov_norm(f, idx, partition) == pytest.approx(64 * lp_norm(f, p), rel=1e-12)


class TestBlockProfile:
    def test_constant(self, partition):
        g = make_grid(TWO_PI, 64)
        prof = dict(block_profile(Field(g, np.ones(64)), partition))
        assert prof[-1] == pytest.approx(np.sqrt(TWO_PI))
        assert all(v < 1e-13 for j, v in prof.items() if j != -1)
        assert list(prof) == list(range(-1, j_max(g) + 1))

    @pytest.mark.parametrize("n", [3, 4, 6])
    def test_fn_single_index(self, partition, idx22, n):
        f = f_seq(SequenceParams.default(n, idx22))
        prof = dict(block_profile(f, partition))
        nf = lp_norm(f, 2)
        assert prof[n] == pytest.approx(nf, rel=1e-12)
        assert all(v < 1e-12 * nf for j, v in prof.items() if j != n)

    def test_sum_two_indices(self, partition, idx22):
        sp = SequenceParams.default(4, idx22)
        f, g = f_seq(sp), g_seq(sp)
        prof = dict(block_profile(f + g, partition))
        scale = lp_norm(f + g, 2)
        populated = sorted(j for j, v in prof.items() if v > 1e-12 * scale)
        assert populated == [-1, 4]

    def test_g_only_low_block(self, partition, idx22):
        g = g_seq(SequenceParams.default(5, idx22))
        prof = dict(block_profile(g, partition))
        assert all(v < 1e-12 * prof[-1] for j, v in prof.items() if j != -1)


def test_block_of_spectral_delta(partition):
    # a single pair of modes at xi = 1 lies in the blend zone of chi and phi
    g = make_grid(TWO_PI, 32)
    spec = np.zeros(32, complex)
    spec[1] = spec[-1] = TWO_PI / 2
    u = to_physical(g, spec)
    lo = dyadic_block(u, -1, partition)
    hi = dyadic_block(u, 0, partition)
    assert np.allclose(lo.samples + hi.samples, u.samples, atol=1e-14)
    assert np.allclose(lo.samples, float(partition.chi(1.0)) * u.samples, atol=1e-14)
