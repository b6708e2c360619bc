import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fivepoint import pde_verify as pv
from fivepoint.conformal import BoundaryConfig
from fivepoint.errors import DomainError
from fivepoint.formulas import three_point_C

CFG = BoundaryConfig(0.0, 1.0, 3.0, 2 + 1.5j)
SECOND = pv.StencilSpec(1e-3, pv.SECOND)


def test_stencil_validation():
    with pytest.raises(ValueError):
        pv.StencilSpec(0.0)
    with pytest.raises(ValueError):
        pv.StencilSpec(1e-3, "spectral")


def test_cardy_residual_small():
    assert abs(pv.cardy_pde_residual((0.0, 1.0, 3.0), pv.StencilSpec(1e-4)).value) < 1e-5
    with pytest.raises(DomainError):
        pv.cardy_pde_residual((1.0, 0.0, 3.0))


def test_cardy_residual_constant_function():
    for u in ((0.0, 1.0, 3.0), (-1.0, 0.5, 0.9)):
        r = pv.cardy_pde_residual(u, func=lambda a, b, c: np.ones_like(np.asarray(b, dtype=float)))
        assert r.value == pytest.approx(-(2 / 3) / (u[2] - u[1]) ** 2, rel=1e-12)


def test_cardy_residual_second_order():
    order = pv.measured_order(lambda s: pv.cardy_pde_residual((0.0, 1.0, 3.0), s),
                              pv.StencilSpec(0.05, pv.SECOND))
    assert abs(order - 2) < 0.3


def test_fc_residual_and_order():
    assert abs(pv.FC_pde_residual(CFG, pv.StencilSpec(1e-4)).value) < 1e-4
    order = pv.measured_order(lambda s: pv.FC_pde_residual(CFG, s), pv.StencilSpec(0.05))
    assert abs(order - 4) < 0.3


def test_fc_negative_controls():
    assert abs(pv.FC_pde_residual(CFG, with_C=False).value) > 1e-2
    assert abs(pv.FC_pde_residual(CFG, g_exponent=10 / 96).value) > 1e-2


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5))
def test_fc_residual_translation_invariant(c):
    a = pv.FC_pde_residual(CFG, pv.StencilSpec(0.02)).value
    b = pv.FC_pde_residual(CFG.translated(c), pv.StencilSpec(0.02)).value
    assert a == pytest.approx(b, rel=1e-4, abs=1e-10)


def test_f_residual():
    assert abs(pv.F_pde_residual(CFG).value) < 1e-4
    assert abs(pv.F_pde_residual(CFG, g_exponent=10 / 96).value) > 1e-2


def test_drift_closed_form_matches_finite_difference():
    for u1, u2, u3 in ((0.0, 1.0, 3.0), (-2.0, -1.5, 0.3)):
        h = 1e-5
        fd = (three_point_C(u1, u2 + h, u3) - three_point_C(u1, u2 - h, u3)) / (2 * h) / three_point_C(u1, u2, u3)
        assert abs(fd - pv.cardy_drift(u1, u2, u3)) < 1e-8


def test_operator_identity_on_random_functions():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rng.normal(size=6)

        def f(u1, u2, u3, w, a=a):
            return np.exp(0.1 * (a[0] * u1 + a[1] * u2 + a[2] * u3 + a[3] * np.real(w) + a[4] * np.imag(w))) \
                + a[5] ** 2
        assert pv.operator_identity_defect(f, CFG) < 1e-10


def test_potential_and_psi0():
    assert pv.potential(math.pi) == pytest.approx(1 / 12, rel=1e-14)
    assert pv.psi0(0.0) == 0.0
    theta = np.linspace(1e-3, 2 * math.pi - 1e-3, 1000)
    assert np.all(pv.psi0(theta) > 0)
    assert pv.eigen_check(np.array([math.pi])) < 1e-8
    assert pv.eigen_check(np.linspace(0.1, 2 * math.pi - 0.1, 500)) < 1e-6


def test_radial_solution_residual_converges():
    fine = pv.GridFunction.sample(pv.radial_solution, np.arange(0.2, 2 * math.pi - 0.2, 5e-3),
                                  np.arange(0.0, 1.0, 5e-3))
    coarse = pv.GridFunction.sample(pv.radial_solution, np.arange(0.2, 2 * math.pi - 0.2, 1e-2),
                                    np.arange(0.0, 1.0, 1e-2))
    r_fine = pv.radial_pde_residual(fine).value
    r_coarse = pv.radial_pde_residual(coarse).value
    assert r_fine < 1e-5
    assert math.log2(r_coarse / r_fine) > 3.3


def test_radial_residual_of_constant_is_zero():
    g = pv.GridFunction.sample(lambda t, s: np.ones(np.broadcast(t, s).shape),
                               np.linspace(0.5, 5.0, 40), np.linspace(0, 1, 40))
    assert pv.radial_pde_residual(g).value == pytest.approx(0.0, abs=1e-9)


def test_leading_eigenvalue_extrapolation():
    lc, lf, lx = pv.extrapolated_eigenvalue(1000, 2000)
    assert abs(lx - pv.LEADING_EIGENVALUE) < 1e-4
    assert abs(lx - pv.LEADING_EIGENVALUE) < abs(lf - pv.LEADING_EIGENVALUE) + 1e-12


def test_eigenvector_and_gap():
    pairs = [pv.leading_eigenpair(pv.RadialOperator(n)) for n in (400, 800, 1600)]
    assert pv.eigenvector_deviation(pairs[-1]) < 1e-3
    for p in pairs:
        assert p.second_eigenvalue < p.eigenvalue
    gaps = [p.gap for p in pairs]
    assert max(gaps) / min(gaps) < 1.1


def test_run_checks_default_suite_passes():
    reports = pv.run_checks()
    assert [r.check_name for r in reports] == list(pv.CHECKS)
    assert all(r.passed for r in reports), [r.to_dict() for r in reports]
    for r in reports:
        d = r.to_dict()
        assert {"check_name", "points_tested", "max_residual", "convergence_order"} <= set(d)


def test_run_checks_negative_control_fails():
    (rep,) = pv.run_checks(["fc-pde"], g_exponent=10 / 96)
    assert not rep.passed


def test_run_checks_rejects_unknown():
    with pytest.raises(DomainError):
        pv.run_checks(["nope"])


def test_random_configs_are_admissible_and_reproducible():
    a = pv.random_configs(50, 1)
    assert a == pv.random_configs(50, 1)
    for c in a:
        assert c.u1 < c.u2 < c.u3 and c.w.imag > 0
