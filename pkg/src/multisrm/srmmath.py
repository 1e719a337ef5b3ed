"""Linear predictors, links, likelihoods, variance partitions, reciprocity."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc

from . import kernels
from .data import ObservationRow
from .errors import DegenerateVarianceError, DimensionError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class EffectState:
    """One full set of model unknowns.

    ``dyad_corr`` is the within-dyad residual correlation; for the binary
    family ``dyad_var`` is pinned at 1 so ``dyad_corr`` equals the residual
    covariance.
    """

    beta: np.ndarray
    actor_effects: np.ndarray
    partner_effects: np.ndarray
    ab_cov: np.ndarray
    dyad_var: float = 1.0
    dyad_corr: float = 0.0
    group_effects: np.ndarray | None = None
    group_var: float | None = None
    dyad_residuals: np.ndarray | None = None
    probit_latents: np.ndarray | None = None

    def copy(self):
        def cp(x):
            return None if x is None else np.array(x, dtype=float, copy=True)

        return replace(self, beta=cp(self.beta), actor_effects=cp(self.actor_effects),
                       partner_effects=cp(self.partner_effects), ab_cov=cp(self.ab_cov),
                       group_effects=cp(self.group_effects),
                       dyad_residuals=cp(self.dyad_residuals),
                       probit_latents=cp(self.probit_latents))


@dataclass(frozen=True)
class VarianceComponents:
    pa: float
    pb: float
    pe: float
    total: float
    pm: float | None = None


def _check_state(state, plan):
    ds = plan.dataset
    if state.beta.shape != (plan.n_beta,):
        raise DimensionError(f"beta has shape {state.beta.shape}, plan needs ({plan.n_beta},)")
    if state.actor_effects.shape != (ds.n_nodes,) or state.partner_effects.shape != (ds.n_nodes,):
        raise DimensionError(f"actor/partner effects must have length {ds.n_nodes}")
    if plan.grouped and (state.group_effects is None or state.group_effects.shape != (ds.n_groups,)):
        raise DimensionError(f"group effects must have length {ds.n_groups}")


def linear_predictors(state: EffectState, plan) -> np.ndarray:
    """Systematic part for every row: x'b (+ m_k) + a_i + b_j (+ log offset)."""
    _check_state(state, plan)
    ds = plan.dataset
    eta = plan.design @ state.beta
    eta = eta + state.actor_effects[ds.actor] + state.partner_effects[ds.partner]
    if plan.grouped:
        eta = eta + state.group_effects[ds.group]
    if plan.use_offset:
        eta = eta + ds.log_offset
    return eta


def linear_predictor(row, state: EffectState, plan) -> float:
    """Systematic part for one row, given either a row index or an ObservationRow."""
    _check_state(state, plan)
    ds = plan.dataset
    if not isinstance(row, ObservationRow):
        row = ds.row(int(row))
    x = np.asarray(row.covariates, dtype=float)
    if x.shape != (len(ds.covariate_names),):
        raise DimensionError(f"row has {x.size} covariates, dataset has {len(ds.covariate_names)}")
    eta = float(x[list(plan.covariate_indices)] @ state.beta)
    try:
        eta += state.actor_effects[ds.node_index[row.actor_label]]
        eta += state.partner_effects[ds.node_index[row.partner_label]]
        if plan.grouped:
            eta += state.group_effects[ds.group_index[row.group_label]]
    except KeyError as exc:
        raise DimensionError(f"label {exc.args[0]!r} is not indexed in the dataset") from None
    if plan.use_offset:
        if row.log_offset is None:
            raise DimensionError("count plan with offset but row has none")
        eta += row.log_offset
    return eta


def norm_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def inverse_link(eta, family):
    """Mean response for linear predictor ``eta``. Scalars in, scalars out."""
    eta_arr = np.asarray(eta, dtype=float)
    if family == "binary":
        out = norm_cdf(eta_arr)
    elif family == "count":
        out = np.exp(eta_arr)
    elif family == "continuous":
        out = eta_arr.copy()
    else:
        raise ValueError(f"unknown family {family!r}")
    return float(out) if out.ndim == 0 else out


def variance_partition(state: EffectState, grouped: bool, family: str) -> VarianceComponents:
    var_a = float(state.ab_cov[0, 0])
    var_b = float(state.ab_cov[1, 1])
    var_e = 1.0 if family == "binary" else float(state.dyad_var)
    var_m = float(state.group_var) if grouped else 0.0
    return partition(var_a, var_b, var_e, var_m if grouped else None)


def partition(var_a, var_b, var_e, var_m=None):
    """VPCs from raw variances; ``var_m=None`` for single-group models."""
    total = var_a + var_b + var_e + (var_m or 0.0)
    if not total > 0:
        raise DegenerateVarianceError(f"total variance is {total}")
    pa, pb, pe = var_a / total, var_b / total, var_e / total
    pm = None if var_m is None else var_m / total
    return VarianceComponents(pa=pa, pb=pb, pe=pe, total=total, pm=pm)


def ab_correlation(var_a, var_b, cov_ab):
    """Generalized reciprocity; NaN when either variance is zero."""
    if var_a <= 0 or var_b <= 0:
        return math.nan
    return float(np.clip(cov_ab / (math.sqrt(var_a) * math.sqrt(var_b)), -1.0, 1.0))


def reciprocity(state: EffectState):
    """``(rho_ab, rho_ee)``; ``rho_ab`` is NaN if an effect variance is zero."""
    c = state.ab_cov
    return ab_correlation(float(c[0, 0]), float(c[1, 1]), float(c[0, 1])), float(state.dyad_corr)


def gaussian_dyad_loglik(stats, sigma2, rho):
    """Log density of residuals summarized by ``kernels.dyad_stats``."""
    s11, s12, n_pairs, ss, n_single = stats
    one_m = 1.0 - rho * rho
    if not (sigma2 > 0 and one_m > 0):
        raise DegenerateVarianceError(f"residual covariance not positive definite "
                                      f"(sigma2={sigma2}, rho={rho})")
    ll = -n_pairs * (LOG_2PI + math.log(sigma2) + 0.5 * math.log(one_m))
    ll -= (s11 - 2.0 * rho * s12) / (2.0 * sigma2 * one_m)
    ll -= 0.5 * n_single * (LOG_2PI + math.log(sigma2)) + ss / (2.0 * sigma2)
    return ll


def log_likelihood(dataset, state: EffectState, plan) -> float:
    """Log-likelihood conditional on the actor, partner and group effects.

    continuous: residual pairs are bivariate normal with variance
    ``dyad_var`` and correlation ``dyad_corr``. binary: independent
    Bernoulli(Phi(eta)) per row. count: Poisson with log rate
    ``eta + dyad residual`` per row.
    """
    eta = linear_predictors(state, plan)
    y = np.ascontiguousarray(dataset.response, dtype=float)
    family = plan.family
    if family == "continuous":
        stats = kernels.dyad_stats(y - eta, dataset.dyad_rows)
        return gaussian_dyad_loglik(stats, float(state.dyad_var), float(state.dyad_corr))
    if family == "binary":
        return float(kernels.probit_loglik(y, eta))
    lin = eta if state.dyad_residuals is None else eta + state.dyad_residuals
    return float(kernels.poisson_loglik(y, lin))


def deviance(dataset, state, plan):
    return -2.0 * log_likelihood(dataset, state, plan)
