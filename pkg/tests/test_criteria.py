import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstatcom.criteria import (
    Criterion,
    ErrorSeries,
    HorizonExceedsTrajectory,
    MalformedSeries,
    ObjectiveSpec,
    ObjectiveTerm,
    canonical_objective,
    integrate_criterion,
    objective_value,
)

ALL = list(Criterion)

# closed forms on e(t) = exp(-t), [0, 10]
EXP_DECAY = {
    Criterion.IAE: 0.99995460007023751515,
    Criterion.ITAE: 0.99950060077261266663,
    Criterion.ISE: 0.49999999896942318878,
    Criterion.ITSE: 0.24999988612126236027,
}


def test_zero_error():
    s = ErrorSeries(np.linspace(0, 1, 11), np.zeros(11))
    assert all(integrate_criterion(s, c) == 0.0 for c in ALL)


def test_unit_error():
    s = ErrorSeries(np.linspace(0, 1, 1001), np.ones(1001))
    vals = {c: integrate_criterion(s, c) for c in ALL}
    assert vals[Criterion.IAE] == pytest.approx(1.0, abs=1e-14)
    assert vals[Criterion.ISE] == pytest.approx(1.0, abs=1e-14)
    assert vals[Criterion.ITAE] == pytest.approx(0.5, abs=1e-14)
    assert vals[Criterion.ITSE] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("crit", ALL)
def test_exponential_decay(crit):
    t = np.linspace(0.0, 10.0, 100001)
    s = ErrorSeries(t, np.exp(-t))
    assert integrate_criterion(s, crit) == pytest.approx(EXP_DECAY[crit], abs=1e-6)


def test_malformed():
    with pytest.raises(MalformedSeries):
        ErrorSeries([0.0], [1.0])
    with pytest.raises(MalformedSeries):
        ErrorSeries([0.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(MalformedSeries):
        ErrorSeries([0.0, 1.0], [1.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
def test_homogeneity_and_monotonicity(k, seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, 201)
    e = rng.normal(size=t.size)
    base = {c: integrate_criterion(ErrorSeries(t, e), c) for c in ALL}
    scaled = {c: integrate_criterion(ErrorSeries(t, k * e), c) for c in ALL}
    for c in (Criterion.IAE, Criterion.ITAE):
        assert scaled[c] == pytest.approx(k * base[c], rel=1e-12)
    for c in (Criterion.ISE, Criterion.ITSE):
        assert scaled[c] == pytest.approx(k * k * base[c], rel=1e-12)
    bigger = e + np.sign(e) * rng.random(t.size)
    for c in (Criterion.IAE, Criterion.ITAE):
        assert integrate_criterion(ErrorSeries(t, bigger), c) >= base[c]


def test_grid_refinement_second_order():
    def val(n):
        t = np.linspace(0, 2, n + 1)
        return integrate_criterion(ErrorSeries(t, (1.5 + np.sin(3 * t)) * np.exp(-t)), Criterion.ITAE)

    fine = val(64000)
    r = (val(100) - fine) / (val(200) - fine)
    assert 3.8 < r < 4.2


def test_delayed_pulse():
    t = np.linspace(0, 10, 10001)

    def pulse(t0):
        return np.where((t >= t0) & (t <= t0 + 1), 1.0, 0.0)

    early = ErrorSeries(t, pulse(1.0))
    late = ErrorSeries(t, pulse(5.0))
    for c in (Criterion.IAE, Criterion.ISE):
        assert integrate_criterion(late, c) == pytest.approx(integrate_criterion(early, c), rel=1e-12)
    for c in (Criterion.ITAE, Criterion.ITSE):
        assert integrate_criterion(late, c) > integrate_criterion(early, c)


def _traj(t, vdc, ref=200.0):
    return SimpleNamespace(t=t, vdc=vdc, vdc_ref=np.full_like(t, ref))


def test_objective_perfect_regulation():
    t = np.linspace(0, 0.1, 5001)
    assert objective_value(_traj(t, np.full_like(t, 200.0)), canonical_objective()) == 0.0


def test_objective_constant_error():
    t = np.linspace(0, 0.1, 5001)
    assert objective_value(_traj(t, np.full_like(t, 201.0)), canonical_objective()) == pytest.approx(5.0, rel=1e-12)


def test_objective_weighted_terms_average():
    t = np.linspace(0, 0.1, 5001)
    tr = _traj(t, 200.0 + np.sin(200 * t))
    one = objective_value(tr, canonical_objective())
    two = ObjectiveSpec((ObjectiveTerm(weight=0.5), ObjectiveTerm(weight=0.5)), 1000.0, 0.1)
    assert objective_value(tr, two) == pytest.approx(one, rel=1e-14)


def test_objective_constant_reference_and_horizon():
    t = np.linspace(0, 0.1, 5001)
    tr = _traj(t, np.full_like(t, 201.0))
    spec = ObjectiveSpec((ObjectiveTerm("vdc", "IAE", 1.0, reference=200.0),), 1.0, 0.05)
    assert objective_value(tr, spec) == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(HorizonExceedsTrajectory):
        objective_value(tr, canonical_objective(0.2))


def test_spec_validation():
    with pytest.raises(ValueError):
        ObjectiveSpec(())
    with pytest.raises(ValueError):
        ObjectiveTerm(weight=-1.0)
    with pytest.raises(ValueError):
        ObjectiveSpec(horizon=0.0)
