import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from frontier import kernels as K
from frontier.errors import NotThinTailed

ALL_KERNELS = [
    K.Gaussian(1.0),
    K.Gaussian(2.0),
    K.Laplace(1.0),
    K.Laplace(0.5),
    K.CompactBump(1.0),
    K.CompactBump(3.0),
    K.PowerLawTail(2.0, 1.0),
    K.PowerLawTail(3.5, 2.0),
]

THIN_KERNELS = [k for k in ALL_KERNELS if k.is_thin_tailed]


def quad_mass(kernel, lo=0.0, hi=np.inf):
    val, _ = quad(lambda x: float(kernel.density(x)), lo, hi, epsabs=1e-12, limit=300)
    return val


class TestDensity:
    def test_laplace_origin(self):
        assert K.Laplace(1.0).density(0.0) == 0.5

    def test_gaussian_origin_matches_quadrature_normalization(self):
        g = K.Gaussian(1.0)
        # oracle: unit mass by quadrature pins the normalization constant
        assert 2 * quad_mass(g) == pytest.approx(1.0, abs=1e-10)
        assert float(g.density(0.0)) == pytest.approx(0.3989423, abs=5e-8)

    def test_powerlaw_origin_matches_quadrature_normalization(self):
        p = K.PowerLawTail(2.0, 1.0)
        assert 2 * quad_mass(p) == pytest.approx(1.0, abs=1e-9)
        assert float(p.density(0.0)) == pytest.approx(0.5, abs=1e-12)

    def test_powerlaw_requires_integrable_exponent(self):
        with pytest.raises(ValueError):
            K.PowerLawTail(1.0, 1.0)


class TestTailMass:
    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=str)
    def test_half_mass_at_zero(self, kernel):
        assert float(kernel.tail_mass(0.0)) == pytest.approx(0.5, abs=1e-10)

    def test_laplace_tail_at_one(self):
        lap = K.Laplace(1.0)
        oracle = quad_mass(lap, 1.0, np.inf)
        assert float(lap.tail_mass(1.0)) == pytest.approx(oracle, abs=1e-10)
        assert float(lap.tail_mass(1.0)) == pytest.approx(0.1839397, abs=5e-8)

    def test_bump_tail_beyond_support(self):
        assert float(K.CompactBump(1.0).tail_mass(1.0)) == 0.0

    @pytest.mark.parametrize("kernel", ALL_KERNELS, ids=str)
    def test_monotone_and_consistent_with_density(self, kernel):
        zs = np.linspace(0.0, kernel.effective_radius(1e-6) if kernel.is_thin_tailed else 30.0, 200)
        tails = np.asarray(kernel.tail_mass(zs))
        assert np.all(np.diff(tails) <= 1e-14)
        # centered difference of the tail matches -density to O(dz^2)
        dz = 1e-4
        mid = zs[5:-5:10]
        num = (np.asarray(kernel.tail_mass(mid + dz)) - np.asarray(kernel.tail_mass(mid - dz))) / (2 * dz)
        assert np.max(np.abs(num + np.asarray(kernel.density(mid)))) < 1e-6


class TestHalfFirstMoment:
    def test_laplace(self):
        lap = K.Laplace(1.0)
        oracle, _ = quad(lambda x: x * float(lap.density(x)), 0, np.inf, epsabs=1e-10)
        assert lap.half_first_moment() == pytest.approx(oracle, abs=1e-8)
        assert lap.half_first_moment() == pytest.approx(0.5, abs=1e-12)

    def test_gaussian(self):
        g = K.Gaussian(1.0)
        oracle, _ = quad(lambda x: x * float(g.density(x)), 0, np.inf, epsabs=1e-10)
        assert g.half_first_moment() == pytest.approx(oracle, abs=1e-8)
        assert g.half_first_moment() == pytest.approx(0.3989423, abs=5e-8)

    def test_powerlaw_p2_diverges(self):
        assert K.PowerLawTail(2.0, 1.0).half_first_moment() == K.INFINITE

    def test_powerlaw_thin_closed_form(self):
        p = K.PowerLawTail(3.5, 2.0)
        oracle, _ = quad(lambda x: x * float(p.density(x)), 0, np.inf, epsabs=1e-10, limit=300)
        assert p.half_first_moment() == pytest.approx(oracle, rel=1e-8)


class TestThinTailIdentity:
    def test_laplace(self):
        assert K.thin_tail_identity_check(K.Laplace(1.0), quad_box=60.0) < 1e-6

    def test_gaussian_sigma2(self):
        g = K.Gaussian(2.0)
        assert g.half_first_moment() == pytest.approx(0.7978846, abs=5e-8)
        assert K.thin_tail_identity_check(g, quad_box=60.0) < 1e-6

    def test_fat_tail_rejected(self):
        with pytest.raises(NotThinTailed):
            K.thin_tail_identity_check(K.PowerLawTail(2.0, 1.0))

    @pytest.mark.parametrize("kernel", THIN_KERNELS, ids=str)
    def test_all_thin_families(self, kernel):
        # box must satisfy the op's own precondition (tail mass < 1e-10);
        # the algebraic thin tail needs a far wider box than the exponential ones
        box, nodes = (1e5, 48) if isinstance(kernel, K.PowerLawTail) else (60.0, 48)
        assert K.thin_tail_identity_check(kernel, quad_box=box, n_nodes=nodes) < 1e-6

    def test_box_below_precondition_rejected(self):
        with pytest.raises(ValueError):
            K.thin_tail_identity_check(K.PowerLawTail(3.5, 2.0), quad_box=60.0)


class TestValidateH1:
    def test_gaussian_all_ok(self):
        report = K.validate_h1(K.Gaussian(1.0), samples=500)
        assert report.all_ok
        assert report.exponential_tail

    def test_powerlaw_flags_fat_tail(self):
        report = K.validate_h1(K.PowerLawTail(2.0, 1.0), samples=500)
        assert report.all_ok
        assert not report.exponential_tail

    def test_misnormalized_table_reported(self):
        class Scaled:
            has_exponential_tail = True

            def density(self, x):
                return 0.9 * K.Laplace(1.0).density(x)

            def effective_radius(self, tol):
                return K.Laplace(1.0).effective_radius(tol)

        report = K.validate_h1(Scaled(), samples=500)
        assert not report.unit_mass
        assert report.mass_defect == pytest.approx(0.1, abs=1e-6)
        assert report.symmetric and report.nonnegative and report.positive_at_zero

    def test_report_text_block(self):
        text = K.validate_h1(K.Laplace(1.0), samples=200).as_text()
        assert "unit_mass = True" in text
        assert "all_ok = True" in text


class TestTruncate:
    def test_support_ends_at_cutoff(self):
        tr = K.truncate(K.PowerLawTail(2.0, 1.0), 10.0, 1.0)
        xs = np.array([-15.0, -10.0, 10.0, 12.0, 40.0])
        assert np.all(tr.density(xs) == 0.0)
        assert float(tr.density(5.0)) > 0.0

    def test_moment_grows_with_cutoff(self):
        base = K.PowerLawTail(2.0, 1.0)
        m10 = K.truncate(base, 10.0, 1.0).half_first_moment()
        m20 = K.truncate(base, 20.0, 1.0).half_first_moment()
        oracle10, _ = quad(
            lambda x: x * float(K.truncate(base, 10.0, 1.0).density(x)), 0, 10.0, points=[9.0], epsabs=1e-10
        )
        assert m10 == pytest.approx(oracle10, abs=1e-8)
        assert m10 < m20 < K.INFINITE

    def test_laplace_wide_cutoff_keeps_moment(self):
        tr = K.truncate(K.Laplace(1.0), 40.0, 1.0)
        assert tr.half_first_moment() == pytest.approx(0.5, abs=1e-6)

    def test_requires_cutoff_above_width(self):
        with pytest.raises(ValueError):
            K.truncate(K.Laplace(1.0), 1.0, 1.0)

    @pytest.mark.parametrize("kernel", [K.PowerLawTail(2.0, 1.0), K.Laplace(1.0)], ids=str)
    def test_pointwise_nesting(self, kernel):
        xs = np.linspace(-25, 25, 501)
        t10 = K.truncate(kernel, 10.0, 1.0)
        t20 = K.truncate(kernel, 20.0, 1.0)
        d10 = t10.density(xs)
        d20 = t20.density(xs)
        dbase = kernel.density(xs)
        assert np.all(d10 <= d20 + 1e-15)
        assert np.all(d20 <= dbase + 1e-15)

    def test_ramp_is_c1(self):
        tr = K.truncate(K.Laplace(1.0), 10.0, 1.0)
        # derivative of the density is continuous across the ramp ends
        for x0 in (9.0, 10.0):
            eps = 1e-5
            left = (float(tr.density(x0)) - float(tr.density(x0 - eps))) / eps
            right = (float(tr.density(x0 + eps)) - float(tr.density(x0))) / eps
            assert abs(left - right) < 1e-3

    def test_tail_mass_consistent_with_quadrature(self):
        tr = K.truncate(K.PowerLawTail(2.0, 1.0), 10.0, 1.0)
        for z in (0.0, 3.0, 9.5):
            oracle, _ = quad(lambda x: float(tr.density(x)), z, 10.0, points=[9.0], epsabs=1e-12)
            assert float(tr.tail_mass(z)) == pytest.approx(oracle, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(min_value=-100, max_value=100, allow_nan=False))
def test_symmetry_and_sign_everywhere(x):
    for kernel in ALL_KERNELS:
        left = float(kernel.density(-x))
        right = float(kernel.density(x))
        assert left == right
        assert right >= 0.0


@settings(max_examples=50, deadline=None)
@given(
    z=st.floats(min_value=0.0, max_value=20.0),
    dz=st.floats(min_value=0.01, max_value=1.0),
)
def test_tail_mass_decreasing_property(z, dz):
    for kernel in ALL_KERNELS:
        assert float(kernel.tail_mass(z + dz)) <= float(kernel.tail_mass(z)) + 1e-14


def test_cell_averages_never_exceed_unit_mass():
    for kernel in ALL_KERNELS:
        cells = K.cell_averages(kernel, 0.1, 500)
        total = (cells[0] + 2 * cells[1:].sum()) * 0.1
        assert total <= 1.0 + 1e-12
        assert np.all(cells >= 0.0)


def test_kernel_from_mapping():
    k = K.kernel_from_mapping({"family": "laplace", "beta": 1.0})
    assert isinstance(k, K.Laplace)
    tr = K.kernel_from_mapping({"family": "power_law", "exponent": 2.0, "scale": 1.0, "cutoff": 10, "width": 1})
    assert isinstance(tr, K.TruncatedKernel)
    with pytest.raises(ValueError):
        K.kernel_from_mapping({"family": "laplace", "beta": 1.0, "bogus": 2})
    with pytest.raises(ValueError):
        K.kernel_from_mapping({"family": "unknown"})
