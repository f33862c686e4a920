import numpy as np
import pytest

from tasekit import integrators as itg
from tasekit import numkit
from tasekit.integrators import NewtonOptions, OperatorGroup, SemiDiscreteSystem, StepPlan, integrate
from tasekit.tase import TaseAlphaWarning, TaseConfig


def _heat(n=40):
    h = 1.0 / (n + 1)
    L = numkit.BandedMatrix.from_diagonals(
        {-1: np.ones(n - 1) / h**2, 0: -2 * np.ones(n) / h**2, 1: np.ones(n - 1) / h**2}, n)
    x = h * np.arange(1, n + 1)
    return L, x


def _order(plan, system, y0, exact, tf, counts):
    errs = [np.abs(integrate(plan, system, 0.0, y0, tf, n, keep="final").final - exact).max() for n in counts]
    return np.polyfit(np.log([tf / n for n in counts]), np.log(errs), 1)[0]


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_plain_erk_order(s):
    sys_ = SemiDiscreteSystem(1, linear=np.array([[-1.0]]))
    slope = _order(StepPlan(f"ERK{s}"), sys_, [1.0], np.exp(-1.0), 1.0, [10, 20, 40, 80])
    assert slope == pytest.approx(s, abs=0.1)


@pytest.mark.parametrize("name,order", [("SDIRK1", 1), ("SDIRK2", 2), ("SDIRK3", 3), ("SDIRK4", 4), ("CN", 2)])
def test_sdirk_order_linear(name, order):
    sys_ = SemiDiscreteSystem(1, linear=np.array([[-1.0]]), source=lambda t: np.array([np.cos(t)]))
    # y' = -y + cos t, y(0) = 0.5  =>  y = (cos t + sin t)/2
    exact = 0.5 * (np.cos(1.0) + np.sin(1.0))
    slope = _order(StepPlan(name), sys_, [0.5], exact, 1.0, [10, 20, 40, 80])
    assert slope == pytest.approx(order, abs=0.15)


@pytest.mark.parametrize("name,order", [("SDIRK2", 2), ("SDIRK3", 3)])
def test_sdirk_newton_order(name, order):
    sys_ = SemiDiscreteSystem(1, nonlinear=lambda y, t: -y**2)
    slope = _order(StepPlan(name), sys_, [1.0], 0.5, 1.0, [8, 16, 32, 64])
    assert slope == pytest.approx(order, abs=0.2)


def test_tase_stays_bounded_far_beyond_the_explicit_limit():
    L, x = _heat()
    y0 = np.sin(np.pi * x)
    sys_ = SemiDiscreteSystem(len(x), linear=L)
    tr = integrate(StepPlan.create("ERK2", 2), sys_, 0.0, y0, 0.1, 10)
    assert not tr.diverged
    exact = y0 * np.exp(-np.pi**2 * 0.1)
    assert np.abs(tr.final - exact).max() < 0.05
    plain = integrate(StepPlan("ERK2"), sys_, 0.0, y0, 0.1, 10)
    assert plain.diverged and plain.diagnostics.diverged_step is not None


def test_operator_form_and_precompute_agree_with_preconditioner_form():
    L, x = _heat(30)
    y0 = np.sin(np.pi * x) + 0.3 * np.sin(3 * np.pi * x)
    sys_ = SemiDiscreteSystem(len(x), linear=L)
    cfg = TaseConfig(3, 2.8)
    runs = [
        StepPlan("ERK3", "tase-combined", cfg),
        StepPlan("ERK3", "tase-combined", TaseConfig(3, 2.8, form="operator")),
        StepPlan("ERK3", "tase-combined", cfg, precompute=True),
    ]
    finals = [integrate(p, sys_, 0.0, y0, 0.05, 7, keep="final").final for p in runs]
    for f in finals[1:]:
        np.testing.assert_allclose(f, finals[0], rtol=1e-9, atol=1e-12)


def test_nonlinear_mode_on_a_linear_system_matches_combined():
    L, x = _heat(20)
    y0 = np.sin(np.pi * x)
    lin = SemiDiscreteSystem(len(x), linear=L)
    wrapped = SemiDiscreteSystem(len(x), nonlinear=lambda y, t: L.matvec(y), linearization=lambda y: L)
    a = integrate(StepPlan.create("ERK2", 2), lin, 0.0, y0, 0.05, 5, keep="final").final
    b = integrate(StepPlan.create("ERK2", 2, mode="tase-nonlinear"), wrapped, 0.0, y0, 0.05, 5, keep="final").final
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)


def test_split_with_one_group_equals_combined():
    L, x = _heat(20)
    y0 = np.cos(x)
    src = lambda t: np.full(len(x), np.sin(t))  # noqa: E731
    sys_ = SemiDiscreteSystem(len(x), linear=L, source=src, splits=(OperatorGroup(L, src, True),))
    a = integrate(StepPlan.create("ERK2", 2), sys_, 0.0, y0, 0.2, 8, keep="final").final
    b = integrate(StepPlan.create("ERK2", 2, mode="tase-split"), sys_, 0.0, y0, 0.2, 8, keep="final").final
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)


def test_inconsistent_splits_are_rejected():
    L, _ = _heat(5)
    with pytest.raises(ValueError, match="split"):
        SemiDiscreteSystem(5, linear=L, splits=(OperatorGroup(np.eye(5)),))


def test_plan_validation():
    with pytest.raises(ValueError):
        StepPlan("ERK2", "tase-combined")
    with pytest.raises(ValueError):
        StepPlan("ERK2", "plain", TaseConfig(2, 1.5))
    with pytest.raises(ValueError):
        StepPlan("SDIRK2", "tase-combined", TaseConfig(2, 1.5))
    with pytest.raises(ValueError):
        StepPlan("ERK2", "sideways", TaseConfig(2, 1.5))
    with pytest.warns(TaseAlphaWarning):
        StepPlan.create("ERK4", 4, alpha=1.0)
    plan = StepPlan.create("rk3", 3, groups=2)
    assert plan.scheme == "ERK3"
    assert plan.tase.alpha == pytest.approx(2 * 7 / 2.5)


def test_integrate_contract():
    sys_ = SemiDiscreteSystem(1, linear=np.array([[-1.0]]))
    tr = integrate(StepPlan("ERK1"), sys_, 0.0, [1.0], 0.3, 3)
    assert tr.times[-1] == 0.3
    assert len(tr.states) == 4
    assert tr.diagnostics.steps == 3
    fin = integrate(StepPlan("ERK1"), sys_, 0.0, [1.0], 0.3, 3, keep="final")
    assert len(fin.states) == 2
    np.testing.assert_array_equal(fin.final, tr.final)
    assert tr.time_per_step() >= 0
    for bad in ({"n_steps": 0}, {"n_steps": 2.5}, {"t_final": 0.0}, {"keep": "some"}):
        kw = {"n_steps": 3, "t_final": 0.3, "keep": "all"} | bad
        with pytest.raises(ValueError):
            integrate(StepPlan("ERK1"), sys_, 0.0, [1.0], kw["t_final"], kw["n_steps"], keep=kw["keep"])
    with pytest.raises(ValueError):
        integrate(StepPlan("ERK1"), sys_, 0.0, [1.0, 2.0], 1.0, 2)


def test_non_finite_rhs_counts_as_divergence():
    sys_ = SemiDiscreteSystem(1, nonlinear=lambda y, t: np.array([np.nan]) if t > 0.1 else -y)
    tr = integrate(StepPlan("ERK2"), sys_, 0.0, [1.0], 1.0, 10)
    assert tr.diverged and tr.diagnostics.diverged_step == 2


def test_newton_failure_raises():
    sys_ = SemiDiscreteSystem(1, nonlinear=lambda y, t: -np.exp(y * 50.0))
    with pytest.raises(itg.NewtonConvergenceError):
        integrate(StepPlan("SDIRK1", newton=NewtonOptions(max_iter=2)), sys_, 0.0, [1.0], 1.0, 1)


def test_fd_jacobian():
    f = lambda y, t: np.array([y[0] ** 2 * y[1], np.sin(y[1])])  # noqa: E731
    y = np.array([1.3, 0.4])
    want = np.array([[2 * 1.3 * 0.4, 1.3**2], [0.0, np.cos(0.4)]])
    np.testing.assert_allclose(itg.jacobian_fd(f, y, 0.0), want, atol=1e-7)


def test_newton_options_validation():
    with pytest.raises(ValueError):
        NewtonOptions(jacobian="exact")


def test_factorizations_are_counted():
    L, x = _heat(10)
    sys_ = SemiDiscreteSystem(len(x), linear=L)
    tr = integrate(StepPlan.create("ERK4", 4), sys_, 0.0, np.sin(np.pi * x), 0.1, 5)
    assert tr.diagnostics.factorizations == 4
