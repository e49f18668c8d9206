"""Nonparametric estimators: frozen hand values plus identity properties."""

import numpy as np
import pytest

from cmprisk_lab.data import Dataset, StepFunction
from cmprisk_lab.nonparam import (DomainError, aalen_johansen_cif,
                                  censoring_survival, cif_from_csh,
                                  cif_from_sdh, csh_from_sdh_two_events,
                                  km_event_free_survival, nelson_aalen_csh)
from conftest import random_sample


def test_km_d3_hand_values(d3):
    s = km_event_free_survival(d3)
    assert s(0.5) == 1.0
    assert abs(s(1.0) - 2.0 / 3.0) < 1e-15
    assert abs(s(2.0) - 2.0 / 3.0) < 1e-15
    assert s(3.0) == 0.0


def test_km_all_censored():
    ds = Dataset(np.array([1.0, 2.0]), np.array([0, 0]), np.zeros((2, 0)), K=2)
    s = km_event_free_survival(ds)
    assert s(5.0) == 1.0


def test_reverse_km_d3(d3):
    g = censoring_survival(d3)
    assert g(1.999) == 1.0
    assert g(2.0) == 0.5
    assert g(3.0) == 0.5


def test_reverse_km_no_censoring():
    ds = Dataset(np.array([1.0, 2.0]), np.array([1, 2]), np.zeros((2, 0)), K=2)
    g = censoring_survival(ds)
    assert g(10.0) == 1.0


def test_reverse_km_all_censored_at_5():
    ds = Dataset(np.full(4, 5.0), np.zeros(4, dtype=int), np.zeros((4, 0)), K=1)
    g = censoring_survival(ds)
    assert g(4.999) == 1.0 and g(5.0) == 0.0


def test_reverse_km_tie_rule():
    """Events at a tied time leave the censoring denominator: Y - d."""
    ds = Dataset(np.array([2.0, 2.0, 2.0, 3.0]), np.array([1, 0, 0, 2]),
                 np.zeros((4, 0)), K=2)
    g = censoring_survival(ds)
    # at t=2: Y=4, d=1 events first, so censoring factor 1 - 2/(4-1)
    assert abs(g(2.0) - (1.0 - 2.0 / 3.0)) < 1e-15


def test_aalen_johansen_d3(d3):
    f1 = aalen_johansen_cif(d3, 1)
    f2 = aalen_johansen_cif(d3, 2)
    assert abs(f1(1.0) - 1.0 / 3.0) < 1e-15
    assert abs(f1(99.0) - 1.0 / 3.0) < 1e-15
    assert f2(2.9) == 0.0
    assert abs(f2(3.0) - 2.0 / 3.0) < 1e-15


def test_nelson_aalen_d3(d3):
    h2 = nelson_aalen_csh(d3, 2)
    assert h2(2.9) == 0.0
    assert abs(h2(3.0) - 1.0) < 1e-15
    # no type-3 events -> zero function
    h1 = nelson_aalen_csh(d3, 1)
    assert abs(h1(5.0) - 1.0 / 3.0) < 1e-15


def test_nelson_aalen_no_events_of_kind():
    ds = Dataset(np.array([1.0, 4.0]), np.array([1, 0]), np.zeros((2, 0)), K=2)
    h = nelson_aalen_csh(ds, 2)
    assert h(100.0) == 0.0


def test_identity_s_plus_cifs(d3):
    """S + F1 + F2 = 1 at every observed time (within 1e-10)."""
    rng = np.random.default_rng(11)
    for _ in range(60):
        ds = random_sample(rng, int(rng.integers(2, 50)))
        s = km_event_free_survival(ds)
        f1 = aalen_johansen_cif(ds, 1)
        f2 = aalen_johansen_cif(ds, 2)
        for t in np.unique(ds.times):
            assert abs(s(t) + f1(t) + f2(t) - 1.0) < 1e-10


def test_k1_aj_is_one_minus_km():
    rng = np.random.default_rng(3)
    for _ in range(25):
        ds = random_sample(rng, 30, K=1)
        s = km_event_free_survival(ds)
        f = aalen_johansen_cif(ds, 1)
        for t in np.unique(ds.times):
            assert abs(f(t) - (1.0 - s(t))) < 1e-12


def test_k1_uncensored_cif_is_ecdf():
    rng = np.random.default_rng(8)
    ds = random_sample(rng, 40, K=1, censor=0.0)
    f = aalen_johansen_cif(ds, 1)
    for t in np.unique(ds.times):
        assert abs(f(t) - np.mean(ds.times <= t)) < 1e-12


def test_monotone_shapes():
    rng = np.random.default_rng(21)
    for _ in range(20):
        ds = random_sample(rng, 35)
        s = km_event_free_survival(ds)
        assert np.all(np.diff(s.values) <= 1e-15)
        assert np.all((s.values >= 0) & (s.values <= 1))
        for k in (1, 2):
            f = aalen_johansen_cif(ds, k)
            h = nelson_aalen_csh(ds, k)
            assert np.all(np.diff(f.values) >= -1e-15)
            assert np.all((f.values >= 0) & (f.values <= 1 + 1e-12))
            assert np.all(np.diff(h.values) >= 0)


def test_product_form_matches_km():
    """prod(1 - dH) over merged CSH increments reproduces KM."""
    rng = np.random.default_rng(14)
    for _ in range(20):
        ds = random_sample(rng, 30)
        s = km_event_free_survival(ds)
        h1 = nelson_aalen_csh(ds, 1)
        h2 = nelson_aalen_csh(ds, 2)
        grid = np.unique(np.concatenate([h1.times, h2.times]))
        prod = 1.0
        prev1 = prev2 = 0.0
        for t in grid:
            inc = (h1(t) - prev1) + (h2(t) - prev2)
            prev1, prev2 = h1(t), h2(t)
            prod *= 1.0 - inc
            assert abs(prod - s(t)) < 1e-12


def test_cif_from_csh_single_jump():
    h = StepFunction(np.array([1.0]), np.array([0.5]), 0.0)
    f = cif_from_csh([h], 1)
    assert abs(f(1.0) - 0.5) < 1e-15


def test_cif_from_csh_zero_hazard():
    h = StepFunction(np.array([]), np.array([]), 0.0)
    f = cif_from_csh([h, h], 1)
    assert f(7.0) == 0.0


def test_cif_from_csh_equals_aj(d3):
    rng = np.random.default_rng(5)
    samples = [d3] + [random_sample(rng, int(rng.integers(3, 40)))
                      for _ in range(20)]
    for ds in samples:
        hs = [nelson_aalen_csh(ds, k) for k in (1, 2)]
        for k in (1, 2):
            aj = aalen_johansen_cif(ds, k)
            via = cif_from_csh(hs, k)
            for t in np.unique(ds.times):
                assert abs(aj(t) - via(t)) < 1e-12


def test_cif_from_csh_rejects_negative_increment():
    bad = StepFunction(np.array([1.0, 2.0]), np.array([0.5, 0.25]), 0.0)
    with pytest.raises(DomainError):
        cif_from_csh([bad], 1)


def test_cif_from_sdh_zero():
    h = StepFunction(np.array([]), np.array([]), 0.0)
    f = cif_from_sdh(h)
    assert f(3.0) == 0.0


def test_cif_from_sdh_monotone_unit_range():
    h = StepFunction(np.array([1.0, 2.0, 5.0]), np.array([0.2, 0.9, 2.4]), 0.0)
    f = cif_from_sdh(h)
    vals = f(np.array([0.5, 1.0, 2.0, 5.0, 12.0]))
    assert np.all(np.diff(vals) >= 0)
    assert np.all((vals >= 0) & (vals < 1))
    assert abs(f(1.0) - (1.0 - np.exp(-0.2))) < 1e-15


def test_csh_from_sdh_worked_increment():
    """dH1_csh = dH1_sdh * (1 + F2/S): 0.1 * 1.5 = 0.15."""
    h1 = StepFunction(np.array([1.0]), np.array([0.1]), 0.0)
    f2 = StepFunction(np.array([0.5]), np.array([0.25]), 0.0)
    s = StepFunction(np.array([0.5]), np.array([0.5]), 1.0)
    out = csh_from_sdh_two_events(h1, f2, s)
    assert abs(out(1.0) - 0.15) < 1e-15


def test_csh_from_sdh_rejects_zero_survival():
    h1 = StepFunction(np.array([1.0]), np.array([0.1]), 0.0)
    f2 = StepFunction(np.array([0.5]), np.array([0.5]), 0.0)
    s = StepFunction(np.array([0.5]), np.array([0.0]), 1.0)
    with pytest.raises(DomainError):
        csh_from_sdh_two_events(h1, f2, s)
