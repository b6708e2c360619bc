import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fivepoint import formulas as fm
from fivepoint.conformal import BoundaryConfig, MobiusMap
from fivepoint.errors import DomainError

# 30-digit references (mpmath, mp.dps = 30)
K3_REF = 0.713174127812659855007629099212
K4_REF = 1.14591559026164641753596309628
K5_REF = 1.03579866723001286477179526844
KF_REF = 1.06074918610195576145356709438
GAUSS_REF = 1.15959526696392836576999205157
# normalized Beta integral of t^(-2/3) (1 - t)^(-2/3) over [0, 1/4], by quadrature
CARDY_QUARTER_REF = 0.373548791334474591160092150458


def rel(a, b):
    return abs(a - b) / abs(b)


def test_constants_against_references():
    k = fm.constants()
    for got, ref in ((k.K3, K3_REF), (k.K4, K4_REF), (k.K5, K5_REF), (k.KF, KF_REF)):
        assert rel(got, ref) < 1e-12
    assert k.K4 == 18 / (5 * math.pi)
    assert rel(k.K3 * fm.gamma(1 / 3) * fm.gamma(7 / 6), math.sqrt(math.pi)) < 1e-14
    assert set(k.formulas()) == {"K3", "K4", "K5", "KF"}


def test_constants_cached_and_idempotent():
    assert fm.constants() is fm.constants()


def test_kf_forms_agree():
    forms = fm.kf_forms()
    assert set(forms) == {"chain", "hypergeometric", "gamma"}
    for v in forms.values():
        assert rel(v, KF_REF) < 1e-10


def test_gauss_value():
    assert rel(fm.gauss_value(), GAUSS_REF) < 1e-12


def test_cardy_special_values():
    assert fm.cardy_of_eta(0.5) == pytest.approx(0.5, abs=1e-14)
    assert fm.cardy_of_eta(0.0) == 0.0
    assert fm.cardy_of_eta(1.0) == pytest.approx(1.0, abs=1e-12)
    assert fm.cardy_of_eta(1e-12) < 1e-3
    assert rel(fm.cardy_of_eta(0.25), CARDY_QUARTER_REF) < 1e-10


def test_cardy_against_beta_quadrature():
    mpmath.mp.dps = 30
    for eta in (0.05, 0.3, 0.7, 0.93):
        ref = mpmath.betainc(1 / 3, 1 / 3, 0, eta, regularized=True)
        assert rel(fm.cardy_of_eta(eta), float(ref)) < 1e-10


@given(st.floats(0.001, 0.999))
def test_cardy_duality(eta):
    assert fm.cardy_of_eta(eta) + fm.cardy_of_eta(1 - eta) == pytest.approx(1.0, abs=1e-10)


def test_cardy_crossing_symmetric_configuration():
    # (0, 1, 2, 3) has cross-ratio 1/4
    assert fm.cardy_eta(0, 1, 2, 3) == pytest.approx(0.25)
    # (0, 1, a, a + 1) has cross-ratio 1 / a^2, so a = sqrt(2) is self-dual
    assert fm.cardy_crossing(0.0, 1.0, math.sqrt(2), 1 + math.sqrt(2)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        fm.cardy_crossing(0, 2, 1, 3)


def test_three_point_C_values():
    k = fm.constants()
    assert rel(fm.three_point_C(0.0, 1.0, 2.0), K3_REF * 2 ** (-1 / 3)) < 1e-13
    with pytest.raises(DomainError):
        fm.three_point_C(0.0, 2.0, 1.0)
    assert k.K3 > 0


@settings(max_examples=100)
@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-5, 5), st.floats(0.1, 10))
def test_three_point_C_covariance(u1, g1, g2, c, lam):
    u2, u3 = u1 + g1, u1 + g1 + g2
    base = fm.three_point_C(u1, u2, u3)
    assert fm.three_point_C(u1 + c, u2 + c, u3 + c) == pytest.approx(base, rel=1e-9)
    assert fm.three_point_C(lam * u1, lam * u2, lam * u3) == pytest.approx(lam ** (-1 / 3) * base, rel=1e-12)


def test_three_point_C_is_limit_of_cardy():
    u1, u2, u3 = 0.0, 1.0, 3.0
    target = fm.three_point_C(u1, u2, u3)
    errs = []
    for s in (6.0, 8.0, 10.0):
        r = math.exp(-s)
        errs.append(abs(fm.three_point_C_finite(u1, u2, u3, s) / r ** (1 / 3) - target) / target)
    assert errs[-1] < 1e-3 and errs[0] > errs[1] > errs[2]


def test_four_point_F_values():
    k = fm.constants()
    expected = k.K4 * 2 ** (-5 / 48) * math.sin(math.pi / 4) ** (1 / 3)
    assert rel(fm.four_point_F(-1.0, 1.0, 1j), expected) < 1e-14
    assert fm.four_point_F(0.0, 1.0, 1e6 + 1j) < 1e-3


@settings(max_examples=100)
@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.1, 10))
def test_four_point_F_scaling(u1, g, wx, wy, lam):
    u2, w = u1 + g, complex(wx, wy)
    base = fm.four_point_F(u1, u2, w)
    assert fm.four_point_F(lam * u1, lam * u2, lam * w) == pytest.approx(lam ** (-5 / 48) * base, rel=1e-10)


def test_G_strip_examples():
    assert abs(fm.G_strip(10.0, 0.5) - 2 ** (1 / 3)) < 1e-8
    assert fm.G_strip(0.3, 1e-9) < 0.2
    with pytest.raises(DomainError):
        fm.G_strip(0.5, 1.0)


@given(st.floats(0.01, 10), st.floats(0.001, 0.999))
def test_G_strip_reflection_symmetry(x, y):
    a, b = fm.G_strip(x, y), fm.G_strip(x, 1 - y)
    assert a == pytest.approx(b, rel=1e-12)


def test_G_strip_against_mpmath():
    mpmath.mp.dps = 30
    for x, y in ((0.1, 0.3), (0.7, 0.5), (2.0, 0.9)):
        x_, y_ = mpmath.mpf(x), mpmath.mpf(y)
        sh, sn = mpmath.sinh(mpmath.pi * x_), mpmath.sin(mpmath.pi * y_)
        ref = (sh ** (-mpmath.mpf(1) / 3) * mpmath.exp(mpmath.pi * x_ / 3)
               * mpmath.hyp2f1(-0.5, -mpmath.mpf(1) / 3, mpmath.mpf(7) / 6, mpmath.exp(-2 * mpmath.pi * x_))
               * (sn ** 2 * sh ** 2 / (sh ** 2 + sn ** 2)) ** (mpmath.mpf(11) / 96))
        assert rel(fm.G_strip(x, y), float(ref)) < 1e-10


@settings(max_examples=100)
@given(st.floats(-2, 2), st.floats(0.2, 2), st.floats(0.2, 2), st.floats(-3, 3), st.floats(0.2, 3),
       st.floats(0.1, 10))
def test_five_point_scaling(u1, g1, g2, wx, wy, lam):
    cfg = BoundaryConfig(u1, u1 + g1, u1 + g1 + g2, complex(wx, wy))
    assert fm.five_point_F(cfg.scaled(lam)) == pytest.approx(lam ** (-5 / 48) * fm.five_point_F(cfg), rel=1e-9)


@settings(max_examples=100)
@given(st.floats(-2, 2), st.floats(0.2, 2), st.floats(0.2, 2), st.floats(-3, 3), st.floats(0.2, 3),
       st.floats(0.5, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_five_point_mobius_covariance_in_w(u1, g1, g2, wx, wy, a, b, c):
    cfg = BoundaryConfig(u1, u1 + g1, u1 + g1 + g2, complex(wx, wy))
    m = MobiusMap(a, b, 0.1 * c, 1.0)
    if m.c != 0 and min(cfg.u1, cfg.u3) - 0.5 <= -m.d / m.c <= max(cfg.u1, cfg.u3) + 0.5:
        return
    img = m.apply(cfg)
    lhs = fm.five_point_F(img) * abs(m.derivative(complex(cfg.w))) ** (5 / 48)
    assert lhs == pytest.approx(fm.five_point_F(cfg), rel=1e-8)


def test_five_point_merging_u3_into_u2():
    w = -1 + 2j
    target = fm.four_point_F(0.0, 1.0, w)
    assert rel(fm.five_point_F(BoundaryConfig(0.0, 1.0, 1 + 1e-6, w)), target) < 1e-3
    errs = [rel(fm.five_point_F(BoundaryConfig(0.0, 1.0, 1 + d, w)), target) for d in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]


def test_five_point_merging_u2_into_u1():
    w = 1 + 1j
    k = fm.constants()
    zeta = fm.triangle_angle(0.0, 2.0, w)
    target = k.K5 * 2 ** (1 / 3) / math.pi ** (5 / 48) * math.sin(zeta) ** (1 / 3) * w.imag ** (-5 / 48)
    assert rel(fm.merged_limit(0.0, 2.0, w), target) < 1e-14
    assert rel(fm.five_point_F(BoundaryConfig(0.0, 1e-6, 2.0, w)), target) < 1e-3
    errs = [rel(fm.five_point_F(BoundaryConfig(0.0, d, 2.0, w)), target) for d in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]


def test_five_point_boundary_behaviour():
    # vanishes as w approaches the real line outside [u1, u2]
    for x in (2.0, -1.0):
        hs = np.array([1e-6, 1e-8, 1e-10, 1e-12])
        vals = np.array([fm.five_point_F(BoundaryConfig(0.0, 1.0, 3.0, x + h * 1j)) for h in hs])
        assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-2
        # the decay is a power law in the distance to the boundary
        slopes = np.diff(np.log(vals)) / np.diff(np.log(hs))
        assert np.all((slopes > 0.2) & (slopes < 0.26))
    # blows up like (2 Im w)^(-5/48) over the interior of (u1, u2)
    ratios = [fm.five_point_F(BoundaryConfig(0.0, 1.0, 3.0, 0.5 + h * 1j)) * (2 * h) ** (5 / 48)
              for h in (1e-4, 1e-6, 1e-8)]
    assert max(ratios) / min(ratios) < 1.01


def test_P_values():
    k = fm.constants()
    assert rel(fm.P2(0.0, 1.0), k.K3 * 2 ** (1 / 3)) < 1e-15
    assert rel(fm.P3(0.0, 1j), k.K4 / 2 ** (5 / 48)) < 1e-15
    with pytest.raises(DomainError):
        fm.P2(1.0, 1.0)
    with pytest.raises(DomainError):
        fm.P3(0.0, 1.0 + 0j)


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.1, 10))
def test_P2_symmetry_and_homogeneity(u1, g, lam):
    u3 = u1 + g
    assert fm.P2(u1, u3) == fm.P2(u3, u1)
    assert fm.P2(lam * u1, lam * u3) == pytest.approx(lam ** (-2 / 3) * fm.P2(u1, u3), rel=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.1, 10), st.floats(-5, 5))
def test_P3_homogeneity_and_translation(u1, wx, wy, lam, c):
    w = complex(wx, wy)
    base = fm.P3(u1, w)
    assert fm.P3(lam * u1, lam * w) == pytest.approx(lam ** (-7 / 16) * base, rel=1e-10)
    assert fm.P3(u1 + c, w + c) == pytest.approx(base, rel=1e-9)


def test_factorization_identity_on_random_triangles():
    rng = np.random.default_rng(7)
    u1 = rng.uniform(-3, 3, 1000)
    u3 = u1 + rng.uniform(0.05, 5, 1000)
    w = rng.uniform(-5, 5, 1000) + 1j * rng.uniform(0.05, 5, 1000)
    lhs, rhs = fm.factorization_sides(u1, u3, w)
    assert np.max(np.abs(lhs - rhs) / rhs) < 1e-10


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))
def test_sine_of_triangle_angle(u1, g, wx, wy):
    u3, w = u1 + g, complex(wx, wy)
    expected = abs(u1 - u3) * w.imag / (abs(w - u1) * abs(w - u3))
    assert math.sin(fm.triangle_angle(u1, u3, w)) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_factorization_exponents_cancel():
    t = fm.EXPONENTS
    powers = t.neighbourhood_powers()
    assert powers == {"P2": Fraction(2, 3), "P3": Fraction(1, 3) + Fraction(5, 48),
                      "P4": Fraction(2, 3) + Fraction(5, 48)}
    assert t.factorization_excess() == 0
