import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dislocsim.norms import (
    EmptyDomain,
    IntegerOrder,
    SpaceTimeField,
    ZeroDenominator,
    asym_extend,
    bmo_bruteforce,
    bmo_norm,
    bmo_search,
    frac_sobolev_norm,
    holder_norm,
    holder_seminorm_t,
    holder_seminorm_x,
    kozono_taniuchi_ratio,
    kt_corpus_fields,
    st_lp_norm,
    sym_asym_relation,
    sym_extend,
    w212_norm,
)

ROOT3 = math.sqrt(1 / 3)


def sample(fn, n=33, n_t=None, T=1.0):
    return SpaceTimeField.sample(fn, n, n_t or n, T)


def test_field_validation():
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros(5), 0.1, 0.1)
    with pytest.raises(ValueError):
        SpaceTimeField(np.full((3, 3), np.nan), 0.5, 0.5)


def test_holder_seminorm_examples():
    assert holder_seminorm_x(sample(lambda x, t: 0 * x + 2 + 0 * t), 0.5) == 0.0
    assert holder_seminorm_x(sample(lambda x, t: x + 0 * t), 0.5) == pytest.approx(1.0, abs=1e-14)
    f = sample(lambda x, t: np.sqrt(x) + 0 * t, 201)
    assert abs(holder_seminorm_x(f, 0.5) - 1.0) <= math.sqrt(f.h)
    assert holder_seminorm_t(sample(lambda x, t: t + 0 * x), 0.25) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        holder_seminorm_x(f, 1.0)


def test_holder_norm_examples():
    c = sample(lambda x, t: 3 + 0 * x + 0 * t)
    for ell in (0.5, 1.5, 2.5, 3.5):
        assert holder_norm(c, ell) == pytest.approx(3.0, abs=1e-10)
    assert holder_norm(sample(lambda x, t: x + 0 * t), 1.5) == pytest.approx(2.0, abs=1e-12)
    assert holder_norm(sample(lambda x, t: t + 0 * x), 0.5) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(IntegerOrder):
        holder_norm(c, 2.0)


def test_frac_sobolev_examples():
    n = 201
    x = np.linspace(0, 1, n)
    assert frac_sobolev_norm(np.full(n, -2.0), 0.5, 2.0) == pytest.approx(2.0, abs=1e-12)
    assert frac_sobolev_norm(np.full(n, 2.0), 0.5, 2.0, 0.0, 4.0) == pytest.approx(2.0 * 2.0, abs=1e-12)
    assert abs(frac_sobolev_norm(x, 0.5, 2.0) - (ROOT3 + 1)) < 1e-3
    assert abs(frac_sobolev_norm(x, 1.5, 2.0) - (ROOT3 + 1)) < 1e-3
    with pytest.raises(ValueError):
        frac_sobolev_norm(x, 1.0, 2.0)


def test_w212_examples():
    assert w212_norm(sample(lambda x, t: 0 * x + 0 * t)) == 0.0
    assert w212_norm(sample(lambda x, t: x + 0 * t)) == pytest.approx(ROOT3 + 1, rel=1e-3)
    assert w212_norm(sample(lambda x, t: t + 0 * x)) == pytest.approx(ROOT3 + 1, rel=1e-3)


def test_bmo_examples():
    assert bmo_norm(sample(lambda x, t: 0 * x + 5 + 0 * t)) == 0.0
    for n in (17, 33):
        f = sample(lambda x, t: x + 0 * t, n)
        assert bmo_norm(f) == bmo_bruteforce(f)
    jump = sample(lambda x, t: np.where(x < 0.5, 1.0, -1.0) + 0 * t, 33)
    b = bmo_norm(jump)
    assert 1.0 - 1e-2 <= b <= 2.0
    assert b == bmo_bruteforce(jump)


def test_bmo_search_returns_a_fitting_cylinder():
    f = sample(lambda x, t: np.sin(3 * x) * np.cos(t), 17)
    osc, i, j, k = bmo_search(f)
    assert i - k >= 0 and i + k <= f.n_x - 1
    assert f.t[j] - (k * f.h) ** 2 >= -1e-12


def test_bmo_empty_domain():
    f = SpaceTimeField(np.ones((2, 11)), 0.1, 1e-4)
    with pytest.raises(EmptyDomain):
        bmo_norm(f)


def test_extensions():
    f = sample(lambda x, t: x + 0 * t, 9, 3)
    xs = sym_extend(f).x
    assert xs[0] == -1 and xs[-1] == pytest.approx(3.0)
    np.testing.assert_allclose(sym_extend(f).values[0], np.abs(((xs + 1) % 2) - 1), atol=1e-14)
    inner = np.abs(xs - np.round(xs)) > 1e-9
    inner |= np.abs((xs % 2)) < 1e-9  # even integers are continuity points of the sawtooth
    saw = ((xs + 1) % 2) - 1
    np.testing.assert_allclose(asym_extend(f).values[0][inner], saw[inner], atol=1e-14)
    c = sample(lambda x, t: 0 * x + 2.5 + 0 * t, 9, 3)
    assert np.all(sym_extend(c).values == 2.5)
    a = asym_extend(c).values[0]
    frac = (xs % 2)
    mid = (np.abs(frac - 0.5) < 0.45) | (np.abs(frac - 1.5) < 0.45)
    np.testing.assert_array_equal(a[mid], np.where(frac[mid] < 1, 2.5, -2.5))


def test_kozono_taniuchi_examples():
    ratio, comps = kozono_taniuchi_ratio(sample(lambda x, t: 1 + 0 * x + 0 * t))
    assert ratio == 1.0
    assert comps == {"sup": 1.0, "bmo": 0.0, "l1": 1.0, "w212": 1.0, "log_plus": 0.0}
    f = sample(lambda x, t: x + 0 * t)
    ratio, comps = kozono_taniuchi_ratio(f)
    w = st_lp_norm(f, 2.0) + 1.0
    expect = 1.0 / ((bmo_bruteforce(f) + 0.5) * (1 + math.log(w)))
    assert ratio == pytest.approx(expect, rel=1e-3)
    with pytest.raises(ZeroDenominator):
        kozono_taniuchi_ratio(sample(lambda x, t: 0 * x + 0 * t))


def test_kozono_taniuchi_bumps_bounded():
    fields = kt_corpus_fields(101)
    ratios = [kozono_taniuchi_ratio(fields[f"bump{k}"])[0] for k in (1, 4, 16)]
    assert all(0 < r < 1 for r in ratios)
    assert ratios[2] <= ratios[0]


def test_sym_asym_examples():
    lhs, comps = sym_asym_relation(sample(lambda x, t: 0 * x + 1.5 + 0 * t, 9, 9, 0.25))
    assert lhs == 0.0 and comps["mean_abs_sym"] == pytest.approx(1.5, rel=1e-14)
    f = sample(lambda x, t: x + 0 * t, 9, 9, 0.25)
    lhs, comps = sym_asym_relation(f)
    assert lhs == bmo_bruteforce(sym_extend(f))
    assert comps["asym_bmo"] == bmo_bruteforce(asym_extend(f))
    assert comps["mean_abs_sym"] == pytest.approx(0.5, rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(
    v=arrays(np.float64, (7, 9), elements=st.floats(-10, 10)),
    lam=st.floats(-4, 4).filter(lambda s: abs(s) > 1e-3),
    c=st.floats(-8, 8),
)
def test_bmo_properties(v, lam, c):
    f = SpaceTimeField(v, 1 / 8, 1 / 32)
    b = bmo_norm(f)
    assert b == bmo_bruteforce(f)
    assert b <= 2 * np.max(np.abs(v)) * (1 + 1e-14)
    scale = np.max(np.abs(v)) + abs(c) + 1
    assert abs(bmo_norm(f.with_values(v + c)) - b) <= 1e-13 * scale
    assert bmo_norm(f.with_values(lam * v)) == pytest.approx(abs(lam) * b, rel=1e-12, abs=1e-13 * scale)


@settings(max_examples=30, deadline=None)
@given(v=arrays(np.float64, (6, 10), elements=st.floats(-5, 5)), lam=st.floats(-4, 4), a=st.floats(0.05, 0.95))
def test_holder_homogeneity_and_restriction(v, lam, a):
    f = SpaceTimeField(v, 0.1, 0.2)
    hx = holder_seminorm_x(f, a)
    assert holder_seminorm_x(f.with_values(lam * v), a) == pytest.approx(abs(lam) * hx, rel=1e-12, abs=1e-300)
    sub = SpaceTimeField(v[1:4, 2:7], 0.1, 0.2)
    assert holder_seminorm_x(sub, a) <= hx
    assert holder_seminorm_t(sub, a) <= holder_seminorm_t(f, a)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(1, 4), lam=st.floats(-3, 3).filter(lambda s: s == 0 or abs(s) > 1e-6), s=st.sampled_from([0.3, 0.5, 1.5]))
def test_sobolev_homogeneity(k, lam, s):
    x = np.linspace(0, 1, 41)
    g = np.sin(k * x) + x**2
    base = frac_sobolev_norm(g, s, 2.0)
    assert frac_sobolev_norm(lam * g, s, 2.0) == pytest.approx(abs(lam) * base, rel=1e-12)
    f = sample(lambda xx, t: np.sin(k * xx) * np.exp(-t), 17)
    assert w212_norm(f.with_values(lam * f.values)) == pytest.approx(abs(lam) * w212_norm(f), rel=1e-12, abs=1e-300)
