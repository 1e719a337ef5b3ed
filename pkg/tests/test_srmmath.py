import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal, norm

from multisrm.data import DyadicDataset, ObservationRow, Schema
from multisrm.errors import DegenerateVarianceError, DimensionError
from multisrm.model import ModelConfig, build_model
from multisrm.srmmath import (EffectState, ab_correlation, inverse_link, linear_predictor,
                              linear_predictors, log_likelihood, partition, reciprocity,
                              variance_partition)

finite = st.floats(-30, 30, allow_nan=False)
positive = st.floats(1e-3, 50, allow_nan=False)


def tiny_dataset(response, family="continuous", offset=None, pairs=True, x=None):
    """Two nodes; one dyad (two rows) or a single directed row."""
    n = 2 if pairs else 1
    actors, partners = ("a", "b")[:n], ("b", "a")[:n]
    covs = np.ones((n, 1)) if x is None else np.column_stack([np.ones(n), x])
    names = ("cons",) if x is None else ("cons", "x1")
    ds = DyadicDataset(actor_labels=actors, partner_labels=partners, dyad_labels=("ab",) * n,
                       group_labels=None, response=np.asarray(response, float),
                       covariates=covs, covariate_names=names,
                       log_offset=None if offset is None else np.full(n, offset),
                       schema=Schema(covariates=names,
                                     offset=None if offset is None else "lo"))
    cfg = ModelConfig(family, names, offset=None if offset is None else "lo")
    return ds, build_model(cfg, ds)


def state(beta, n_nodes=2, **kw):
    return EffectState(beta=np.asarray(beta, float), actor_effects=np.zeros(n_nodes),
                       partner_effects=np.zeros(n_nodes), ab_cov=np.eye(2), **kw)


# linear predictor -------------------------------------------------------------

def test_linear_predictor_intercept_only():
    ds, plan = tiny_dataset([1.0, 0.0], "binary")
    assert linear_predictor(0, state([0.13]), plan) == pytest.approx(0.13, abs=1e-15)
    assert linear_predictor(1, state([0.0]), plan) == 0.0


def test_linear_predictor_offset_additive():
    ds, plan = tiny_dataset([1.0, 2.0], "count", offset=math.log(2.0))
    assert linear_predictor(0, state([0.0]), plan) == pytest.approx(math.log(2.0), abs=1e-15)


def test_linear_predictor_effects_and_row_objects():
    ds, plan = tiny_dataset([0.3, -0.1], x=[0.5, -2.0])
    s = state([1.0, 2.0])
    s.actor_effects[:] = (0.1, 0.2)
    s.partner_effects[:] = (-0.3, 0.4)
    # row 0: a -> b
    assert linear_predictor(0, s, plan) == pytest.approx(1.0 + 1.0 + 0.1 + 0.4)
    assert linear_predictor(ds.row(1), s, plan) == pytest.approx(1.0 - 4.0 + 0.2 - 0.3)
    assert np.allclose(linear_predictors(s, plan), [2.5, -3.1])


def test_linear_predictor_dimension_errors():
    ds, plan = tiny_dataset([0.3, -0.1])
    with pytest.raises(DimensionError):
        linear_predictor(0, state([1.0, 2.0]), plan)
    row = ObservationRow("a", "zz", "ab", None, 0.0, (1.0,), None)
    with pytest.raises(DimensionError):
        linear_predictor(row, state([1.0]), plan)


@settings(max_examples=50, deadline=None)
@given(b1=st.lists(finite, min_size=2, max_size=2), b2=st.lists(finite, min_size=2, max_size=2))
def test_linear_predictor_linear_in_beta(b1, b2):
    ds, plan = tiny_dataset([0.3, -0.1], x=[0.5, -2.0])
    for r in range(2):
        lhs = linear_predictor(r, state(np.add(b1, b2)), plan)
        rhs = (linear_predictor(r, state(b1), plan) + linear_predictor(r, state(b2), plan)
               - linear_predictor(r, state([0.0, 0.0]), plan))
        assert lhs == pytest.approx(rhs, abs=1e-9)


# links ------------------------------------------------------------------------

def test_inverse_link_examples():
    assert round(inverse_link(-0.17, "binary"), 2) == 0.43
    assert round(inverse_link(0.60, "binary"), 2) == 0.73
    assert inverse_link(0.0, "binary") == 0.5
    assert inverse_link(0.0, "count") == 1.0
    assert inverse_link(1.25, "continuous") == 1.25
    assert isinstance(inverse_link(0.3, "binary"), float)
    assert inverse_link(np.zeros(3), "count").shape == (3,)


def test_phi_against_scipy_oracle():
    x = np.linspace(-37, 8, 2001)
    got = inverse_link(x, "binary")
    ref = norm.cdf(x)
    assert np.all(np.abs(got - ref) <= 1e-14 + 1e-12 * ref)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-40, 40, allow_nan=False))
def test_phi_symmetry(x):
    assert abs(inverse_link(-x, "binary") - (1.0 - inverse_link(x, "binary"))) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-8, 8, allow_nan=False), d=st.floats(1e-3, 5))
def test_links_monotone(x, d):
    for fam in ("binary", "count"):
        assert inverse_link(x + d, fam) >= inverse_link(x, fam)
    # near 1 the probit gap drops below one ulp, so strictness only holds where representable
    if x + d <= 5.0:
        assert inverse_link(x + d, "binary") > inverse_link(x, "binary")
    assert inverse_link(x + d, "count") > inverse_link(x, "count")


# variance partition -------------------------------------------------------------

def test_partition_reference_values():
    v = partition(0.3346, 1.0318, 1.0)
    assert v.total == pytest.approx(2.3664, abs=1e-12)
    assert round(v.pa, 4) == 0.1414
    assert v.pm is None


def test_partition_symmetric_cases():
    s = state([0.0])
    v = variance_partition(s, grouped=False, family="binary")
    assert v.pa == v.pb == v.pe == pytest.approx(1 / 3)
    s.group_var = 1.0
    s.dyad_var = 1.0
    v = variance_partition(s, grouped=True, family="count")
    assert (v.pm, v.pa, v.pb, v.pe) == (0.25, 0.25, 0.25, 0.25)


def test_partition_binary_ignores_dyad_var():
    s = state([0.0], dyad_var=7.0)
    assert variance_partition(s, False, "binary").total == 3.0
    assert variance_partition(s, False, "continuous").total == 9.0


def test_partition_degenerate():
    with pytest.raises(DegenerateVarianceError):
        partition(0.0, 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(va=positive, vb=positive, ve=positive, vm=st.one_of(st.none(), positive))
def test_partition_sums_to_one(va, vb, ve, vm):
    v = partition(va, vb, ve, vm)
    parts = [v.pa, v.pb, v.pe] + ([v.pm] if vm is not None else [])
    assert all(0.0 <= p <= 1.0 for p in parts)
    assert abs(sum(parts) - 1.0) <= 1e-12


# reciprocity ------------------------------------------------------------------

def test_reciprocity_examples():
    s = state([0.0], dyad_corr=0.732)
    s.ab_cov = np.array([[1.0, 1.0], [1.0, 4.0]])
    assert reciprocity(s) == (0.5, 0.732)
    s.ab_cov = np.array([[1.0, 0.0], [0.0, 4.0]])
    assert reciprocity(s)[0] == 0.0
    s.ab_cov = np.array([[0.0, 0.0], [0.0, 4.0]])
    assert math.isnan(reciprocity(s)[0])


@settings(max_examples=200, deadline=None)
@given(va=positive, vb=positive, r=st.floats(-0.99, 0.99), c=st.floats(1e-3, 1e3))
def test_reciprocity_scale_invariant(va, vb, r, c):
    cov = r * math.sqrt(va * vb)
    base = ab_correlation(va, vb, cov)
    assert -1.0 <= base <= 1.0
    assert ab_correlation(c * va, c * vb, c * cov) == pytest.approx(base, abs=1e-12)


# log-likelihood -----------------------------------------------------------------

def test_poisson_single_row():
    ds, plan = tiny_dataset([0.0], "count", pairs=False)
    s = state([0.0], dyad_residuals=np.zeros(1))
    assert log_likelihood(ds, s, plan) == pytest.approx(-1.0, abs=1e-15)


def test_gaussian_singleton_at_mode():
    ds, plan = tiny_dataset([0.7], pairs=False)
    assert log_likelihood(ds, state([0.7]), plan) == pytest.approx(-0.5 * math.log(2 * math.pi),
                                                                   abs=1e-15)


def test_gaussian_pair_against_mvn_oracle():
    ds, plan = tiny_dataset([1.0, 1.0])
    s = state([0.0], dyad_var=1.0, dyad_corr=0.5)
    ref = multivariate_normal(mean=[0, 0], cov=[[1.0, 0.5], [0.5, 1.0]]).logpdf([1.0, 1.0])
    assert log_likelihood(ds, s, plan) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(y1=finite, y2=finite, var=positive, rho=st.floats(-0.95, 0.95))
def test_gaussian_pair_matches_mvn(y1, y2, var, rho):
    ds, plan = tiny_dataset([y1, y2])
    s = state([0.0], dyad_var=var, dyad_corr=rho)
    ref = multivariate_normal(mean=[0, 0], cov=var * np.array([[1, rho], [rho, 1]])).logpdf([y1, y2])
    assert log_likelihood(ds, s, plan) == pytest.approx(ref, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(y1=finite, y2=finite, var=positive)
def test_gaussian_pair_uncorrelated_is_product(y1, y2, var):
    ds, plan = tiny_dataset([y1, y2])
    s = state([0.0], dyad_var=var, dyad_corr=0.0)
    ref = norm.logpdf(y1, scale=math.sqrt(var)) + norm.logpdf(y2, scale=math.sqrt(var))
    assert abs(log_likelihood(ds, s, plan) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_binary_loglik_is_bernoulli_of_systematic_part():
    ds, plan = tiny_dataset([1.0, 0.0], "binary", x=[0.4, -1.0])
    s = state([0.2, 0.5], dyad_corr=0.9)
    eta = np.array([0.2 + 0.2, 0.2 - 0.5])
    ref = math.log(norm.cdf(eta[0])) + math.log(norm.sf(eta[1]))
    assert log_likelihood(ds, s, plan) == pytest.approx(ref, abs=1e-12)


def test_binary_loglik_extreme_tail_finite():
    ds, plan = tiny_dataset([1.0, 0.0], "binary")
    ll = log_likelihood(ds, state([-45.0]), plan)
    ref = norm.logcdf(-45.0) + norm.logsf(-45.0)
    assert math.isfinite(ll) and ll == pytest.approx(ref, rel=1e-10)


def test_poisson_includes_dyad_residual():
    ds, plan = tiny_dataset([2.0, 0.0], "count")
    s = state([0.1], dyad_residuals=np.array([0.3, -0.2]))
    lam = np.exp([0.4, -0.1])
    ref = float(np.sum([2 * math.log(lam[0]) - lam[0] - math.log(2), -lam[1]]))
    assert log_likelihood(ds, s, plan) == pytest.approx(ref, abs=1e-12)


def test_non_positive_definite_dyad_covariance():
    ds, plan = tiny_dataset([1.0, 1.0])
    with pytest.raises(DegenerateVarianceError):
        log_likelihood(ds, state([0.0], dyad_var=1.0, dyad_corr=1.0), plan)
