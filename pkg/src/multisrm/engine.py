"""Multi-chain MCMC for the six SRM variants.

A sweep for the Gaussian-scale families (continuous response, or probit
latents for binary) is: latents (binary only), fixed effects (conjugate
normal), per-node (actor, partner) pairs, group effects, the actor-partner
covariance (inverse-Wishart), the group variance (inverse-gamma), and the
dyad variance/correlation (random-walk Metropolis on log variance and
Fisher-z correlation).

For counts every location block (fixed effects, node pairs, group effects,
dyad residual pairs) is single-site adaptive random-walk Metropolis against
the Poisson likelihood; variance blocks are as above given the effects.

Proposal scales adapt by Robbins-Monro during burn-in only.
"""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.stats import invwishart

from . import kernels
from ._jit import BACKEND
from .errors import (ChainFailureError, ConfigurationError, DegenerateResponseError,
                     EmptySamplesError)
from .model import ModelPlan
from .srmmath import (EffectState, ab_correlation, gaussian_dyad_loglik, partition)

log = logging.getLogger(__name__)

BLOCKS = ("latent", "beta", "ab", "group", "residual", "ab_cov", "group_var", "dyad")
BLOCK_IDS = {name: k for k, name in enumerate(BLOCKS)}
TARGET_1D = 0.44
TARGET_2D = 0.30
TAIL_POOL = 64
DYAD_INNER_STEPS = 5
SCALE_BOUNDS = (1e-4, 50.0)


@dataclass(frozen=True, eq=False)
class Layout:
    """Index arrays the kernels need, derived once per plan."""

    y: np.ndarray
    x: np.ndarray
    offset: np.ndarray
    actor: np.ndarray
    partner: np.ndarray
    group: np.ndarray
    dyad_rows: np.ndarray
    node_ptr: np.ndarray
    ent_out: np.ndarray
    ent_in: np.ndarray
    group_ptr: np.ndarray
    group_dyads: np.ndarray
    group_row_ptr: np.ndarray
    group_rows: np.ndarray
    n_nodes: int
    n_groups: int


def _csr(keys, values, n_keys):
    order = np.argsort(keys, kind="stable")
    ptr = np.zeros(n_keys + 1, dtype=np.int64)
    np.add.at(ptr, keys + 1, 1)
    return np.cumsum(ptr), np.ascontiguousarray(values[order])


def build_layout(plan: ModelPlan) -> Layout:
    ds = plan.dataset
    rows = np.ascontiguousarray(ds.dyad_rows)
    r1, r2 = rows[:, 0], rows[:, 1]
    u, v = ds.actor[r1], ds.partner[r1]
    paired = r2 >= 0
    # node u is the actor of r1 and the partner of r2; node v the reverse
    nodes = np.concatenate([u, v])
    outs = np.concatenate([r1, np.where(paired, r2, -1)])
    ins = np.concatenate([np.where(paired, r2, -1), r1])
    ent = np.arange(nodes.size)
    node_ptr, order = _csr(nodes, ent, ds.n_nodes)
    n_groups = max(ds.n_groups, 1)
    group = np.ascontiguousarray(ds.group, dtype=np.int64)
    group_ptr, group_dyads = _csr(group[r1], np.arange(rows.shape[0]), n_groups)
    group_row_ptr, group_rows = _csr(group, np.arange(ds.n_rows), n_groups)
    return Layout(
        y=np.ascontiguousarray(ds.response, dtype=float),
        x=np.ascontiguousarray(plan.design, dtype=float),
        offset=np.ascontiguousarray(plan.offset, dtype=float),
        actor=np.ascontiguousarray(ds.actor), partner=np.ascontiguousarray(ds.partner),
        group=group, dyad_rows=rows,
        node_ptr=node_ptr, ent_out=np.ascontiguousarray(outs[order]),
        ent_in=np.ascontiguousarray(ins[order]),
        group_ptr=group_ptr, group_dyads=group_dyads,
        group_row_ptr=group_row_ptr, group_rows=group_rows,
        n_nodes=ds.n_nodes, n_groups=n_groups,
    )


@dataclass
class ChainState:
    effect_state: EffectState
    rngs: dict
    proposal_scales: dict
    chain_id: int
    iteration: int = 0
    pinned: frozenset = frozenset()
    accept: dict = field(default_factory=dict)
    layout: Layout | None = None
    block: str | None = None

    def rng(self, block):
        return self.rngs[block]


def block_rngs(seed, chain_id):
    """One Philox stream per (seed, chain, block)."""
    base = int(seed) % (1 << 63)
    return {name: np.random.Generator(np.random.Philox(
        np.random.SeedSequence([base, int(chain_id), BLOCK_IDS[name]])))
        for name in BLOCKS}


def _uniforms(rng, size):
    # (0, 1]: safe under log and as an inverse-CDF argument
    return 1.0 - rng.random(size)


def _constant_column(x):
    for k in range(x.shape[1]):
        col = x[:, k]
        if col[0] != 0 and np.all(col == col[0]):
            return k, float(col[0])
    return None, 1.0


def init_state(plan: ModelPlan, chain_id: int, pinned=(), start: EffectState | None = None,
               layout: Layout | None = None) -> ChainState:
    """Default starting values; ``start`` replaces them (a test hook)."""
    lay = layout or build_layout(plan)
    cfg = plan.config
    n = lay.y.size
    rngs = block_rngs(cfg.chains.seed, chain_id)
    pinned = frozenset(pinned)
    unknown = pinned - set(BLOCKS)
    if unknown:
        raise ConfigurationError(f"unknown blocks to pin: {sorted(unknown)}")

    if start is not None:
        st = start.copy()
    else:
        beta = np.zeros(plan.n_beta)
        k, val = _constant_column(lay.x)
        if n == 0:
            raise DegenerateResponseError("no observations")
        ybar = float(lay.y.mean())
        if k is not None:
            if plan.family == "binary":
                p = min(max(ybar, 1.0 / (2 * n)), 1.0 - 1.0 / (2 * n))
                beta[k] = kernels.norm_ppf(p) / val
            elif plan.family == "count":
                beta[k] = (math.log(max(ybar, 1.0 / (2 * n))) - float(lay.offset.mean())) / val
            else:
                beta[k] = ybar / val
        st = EffectState(
            beta=beta,
            actor_effects=np.zeros(lay.n_nodes), partner_effects=np.zeros(lay.n_nodes),
            ab_cov=cfg.prior.guess_matrix.copy(),
            dyad_var=1.0, dyad_corr=0.0,
            group_effects=np.zeros(lay.n_groups) if plan.grouped else None,
            group_var=0.1 if plan.grouped else None,
        )
        if plan.family == "count":
            st.dyad_residuals = np.zeros(n)
    if not plan.grouped:
        st.group_effects = np.zeros(1)
    if plan.family == "count" and st.dyad_residuals is None:
        st.dyad_residuals = np.zeros(n)
    if plan.family == "binary":
        st.dyad_var = 1.0
        if st.probit_latents is None:
            st.probit_latents = np.zeros(n)
            eta = _systematic(st, lay)
            kernels.update_probit_latents(st.probit_latents, lay.y, eta, lay.dyad_rows,
                                          st.dyad_corr, _uniforms(rngs["latent"], n),
                                          _uniforms(rngs["latent"], TAIL_POOL))

    scales = {"dyad": np.array([0.1])}
    if plan.family == "count":
        lam = math.exp(float(np.mean(lay.x @ st.beta + lay.offset)))
        deg = np.diff(lay.node_ptr).astype(float)
        scales["beta"] = 2.4 / np.sqrt(1.0 + lam * np.sum(lay.x ** 2, axis=0))
        scales["ab"] = 1.7 / np.sqrt(2.0 + lam * deg)
        scales["group"] = 2.4 / np.sqrt(10.0 + lam * np.diff(lay.group_row_ptr))
        paired = lay.dyad_rows[:, 1] >= 0
        scales["residual"] = np.where(paired, 1.7, 2.4) / math.sqrt(1.0 + lam)
    return ChainState(effect_state=st, rngs=rngs, proposal_scales=scales,
                      chain_id=chain_id, pinned=pinned, layout=lay)


def _systematic(st, lay):
    eta = lay.x @ st.beta + lay.offset
    return eta + st.actor_effects[lay.actor] + st.partner_effects[lay.partner] + st.group_effects[lay.group]


def _adapt(cs, block, acc, target, gain):
    s = cs.proposal_scales[block]
    s *= np.exp(gain * (acc - target))
    np.clip(s, *SCALE_BOUNDS, out=s)


def _tally(cs, block, acc):
    tot = cs.accept.setdefault(block, [0.0, 0])
    tot[0] += float(np.sum(acc))
    tot[1] += int(np.size(acc))


def _enter(cs, block):
    # remembers the running block so generic numerical errors can name it
    if block in cs.pinned:
        return False
    cs.block = block
    return True


def _check(block, cs, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise ChainFailureError(f"non-finite values after block {block!r} at iteration "
                                    f"{cs.iteration} of chain {cs.chain_id}",
                                    iteration=cs.iteration, block=block)


def _draw_ab_cov(cs, plan):
    st = cs.effect_state
    prior = plan.config.prior
    ab = np.stack([st.actor_effects, st.partner_effects])
    scale = prior.iw_scale + ab @ ab.T
    df = prior.ab_prior_df + ab.shape[1]
    st.ab_cov = np.asarray(invwishart.rvs(df=df, scale=scale, random_state=cs.rng("ab_cov")))


def _draw_group_var(cs, plan):
    st = cs.effect_state
    prior = plan.config.prior
    m = st.group_effects
    shape = prior.scalar_variance_shape + 0.5 * m.size
    rate = prior.scalar_variance_rate + 0.5 * float(m @ m)
    st.group_var = rate / cs.rng("group_var").gamma(shape)


def _dyad_log_target(stats, log_var, z_corr, fixed_var, prior):
    rho = math.tanh(z_corr)
    if abs(rho) >= 1.0:
        return -math.inf
    # Jacobian of the Fisher-z transform against the uniform(-1, 1) prior
    lt = math.log1p(-rho * rho)
    if fixed_var:
        return lt + gaussian_dyad_loglik(stats, 1.0, rho)
    var = math.exp(log_var)
    # inverse-gamma prior on the variance times the log-scale Jacobian
    lt += -prior.scalar_variance_shape * log_var - prior.scalar_variance_rate / var
    return lt + gaussian_dyad_loglik(stats, var, rho)


def _update_dyad_params(cs, plan, stats, gain):
    st = cs.effect_state
    fixed_var = plan.family == "binary"
    prior = plan.config.prior
    rng = cs.rng("dyad")
    dim = 1 if fixed_var else 2
    normals = rng.standard_normal((DYAD_INNER_STEPS, dim))
    logu = np.log(_uniforms(rng, DYAD_INNER_STEPS))
    s = cs.proposal_scales["dyad"][0]
    log_var = math.log(st.dyad_var)
    z = math.atanh(st.dyad_corr)
    cur = _dyad_log_target(stats, log_var, z, fixed_var, prior)
    acc = np.zeros(DYAD_INNER_STEPS)
    for k in range(DYAD_INNER_STEPS):
        nz = z + s * normals[k, 0]
        nv = log_var if fixed_var else log_var + s * normals[k, 1]
        new = _dyad_log_target(stats, nv, nz, fixed_var, prior)
        if math.isnan(new):
            raise ChainFailureError(f"non-finite acceptance ratio in block 'dyad' at iteration "
                                    f"{cs.iteration}", iteration=cs.iteration, block="dyad")
        if logu[k] < new - cur:
            z, log_var, cur = nz, nv, new
            acc[k] = 1.0
    st.dyad_corr = math.tanh(z)
    if not fixed_var:
        st.dyad_var = math.exp(log_var)
    _tally(cs, "dyad", acc)
    if gain:
        _adapt(cs, "dyad", float(acc.mean()), TARGET_1D if fixed_var else TARGET_2D, gain)


def _sweep_gaussian(cs, plan, gain):
    st, lay = cs.effect_state, cs.layout
    binary = plan.family == "binary"
    sigma2 = 1.0 if binary else st.dyad_var
    rho = st.dyad_corr
    a, b, m = st.actor_effects, st.partner_effects, st.group_effects
    n = lay.y.size

    if binary and _enter(cs, "latent"):
        rng = cs.rng("latent")
        kernels.update_probit_latents(st.probit_latents, lay.y, _systematic(st, lay),
                                      lay.dyad_rows, rho, _uniforms(rng, n),
                                      _uniforms(rng, TAIL_POOL))
        _check("latent", cs, st.probit_latents)
    z = st.probit_latents if binary else lay.y

    if _enter(cs, "beta"):
        ytil = z - a[lay.actor] - b[lay.partner] - m[lay.group]
        w = kernels.dyad_precision_apply(lay.x, lay.dyad_rows, sigma2, rho)
        prec = lay.x.T @ w
        try:
            chol = linalg.cholesky(prec, lower=True)
        except linalg.LinAlgError as exc:
            raise ChainFailureError(f"fixed-effect precision not positive definite: {exc}",
                                    iteration=cs.iteration, block="beta") from None
        mean = linalg.cho_solve((chol, True), w.T @ ytil)
        noise = linalg.solve_triangular(chol.T, cs.rng("beta").standard_normal(plan.n_beta),
                                        lower=False)
        st.beta = mean + noise
        _check("beta", cs, st.beta)
    base = lay.x @ st.beta

    if _enter(cs, "ab"):
        prec_ab = np.linalg.inv(st.ab_cov)
        normals = cs.rng("ab").standard_normal((lay.n_nodes, 2))
        kernels.gibbs_nodes(a, b, z, base, m, lay.actor, lay.partner, lay.group, lay.node_ptr,
                            lay.ent_out, lay.ent_in, prec_ab, sigma2, rho, normals)
        _check("ab", cs, a, b)

    if plan.grouped and _enter(cs, "group"):
        normals = cs.rng("group").standard_normal(lay.n_groups)
        kernels.gibbs_groups(m, z, base, a, b, lay.actor, lay.partner, lay.dyad_rows,
                             lay.group_ptr, lay.group_dyads, st.group_var, sigma2, rho, normals)
        _check("group", cs, m)

    if _enter(cs, "ab_cov"):
        _draw_ab_cov(cs, plan)
        _check("ab_cov", cs, st.ab_cov)
    if plan.grouped and _enter(cs, "group_var"):
        _draw_group_var(cs, plan)
    if _enter(cs, "dyad"):
        e = z - base - a[lay.actor] - b[lay.partner] - m[lay.group]
        _update_dyad_params(cs, plan, kernels.dyad_stats(e, lay.dyad_rows), gain)


def _sweep_count(cs, plan, gain):
    st, lay = cs.effect_state, cs.layout
    a, b, m, e = st.actor_effects, st.partner_effects, st.group_effects, st.dyad_residuals
    lin = _systematic(st, lay) + e

    def rwm(block, size, dims):
        rng = cs.rng(block)
        normals = rng.standard_normal(size if dims == 1 else (size, dims))
        logu = np.log(_uniforms(rng, size))
        acc = np.empty(size)
        return normals, logu, acc

    if _enter(cs, "beta"):
        normals, logu, acc = rwm("beta", plan.n_beta, 1)
        kernels.rwm_beta(st.beta, lay.x, lay.y, lin, cs.proposal_scales["beta"], normals, logu, acc)
        _check("beta", cs, st.beta, lin)
        _tally(cs, "beta", acc)
        if gain:
            _adapt(cs, "beta", acc, TARGET_1D, gain)
    if _enter(cs, "ab"):
        normals, logu, acc = rwm("ab", lay.n_nodes, 2)
        prec_ab = np.linalg.inv(st.ab_cov)
        kernels.rwm_nodes(a, b, lay.y, lin, lay.node_ptr, lay.ent_out, lay.ent_in, prec_ab,
                          cs.proposal_scales["ab"], normals, logu, acc)
        _check("ab", cs, a, b, lin)
        _tally(cs, "ab", acc)
        if gain:
            _adapt(cs, "ab", acc, TARGET_2D, gain)
    if plan.grouped and _enter(cs, "group"):
        normals, logu, acc = rwm("group", lay.n_groups, 1)
        kernels.rwm_groups(m, lay.y, lin, lay.group_row_ptr, lay.group_rows, st.group_var,
                           cs.proposal_scales["group"], normals, logu, acc)
        _check("group", cs, m, lin)
        _tally(cs, "group", acc)
        if gain:
            _adapt(cs, "group", acc, TARGET_1D, gain)
    if _enter(cs, "residual"):
        nd = lay.dyad_rows.shape[0]
        normals, logu, acc = rwm("residual", nd, 2)
        kernels.rwm_dyad_residuals(e, lay.y, lin, lay.dyad_rows, st.dyad_var, st.dyad_corr,
                                   cs.proposal_scales["residual"], normals, logu, acc)
        _check("residual", cs, e, lin)
        _tally(cs, "residual", acc)
        if gain:
            target = np.where(lay.dyad_rows[:, 1] >= 0, TARGET_2D, TARGET_1D)
            _adapt(cs, "residual", acc, target, gain)

    if _enter(cs, "ab_cov"):
        _draw_ab_cov(cs, plan)
        _check("ab_cov", cs, st.ab_cov)
    if plan.grouped and _enter(cs, "group_var"):
        _draw_group_var(cs, plan)
    if _enter(cs, "dyad"):
        _update_dyad_params(cs, plan, kernels.dyad_stats(e, lay.dyad_rows), gain)


def step_chain(cs: ChainState, plan: ModelPlan, dataset=None, adapt_gain=0.0) -> ChainState:
    """Advance ``cs`` by one sweep in place and return it.

    ``adapt_gain > 0`` applies one Robbins-Monro update to the proposal scales.
    """
    if cs.layout is None:
        cs.layout = build_layout(plan)
    cs.block = None
    try:
        if plan.family == "count":
            _sweep_count(cs, plan, adapt_gain)
        else:
            _sweep_gaussian(cs, plan, adapt_gain)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        raise ChainFailureError(f"numerical failure in block {cs.block!r} at iteration "
                                f"{cs.iteration}: {exc}", iteration=cs.iteration,
                                block=cs.block) from exc
    cs.iteration += 1
    return cs


def record(cs: ChainState, plan: ModelPlan) -> np.ndarray:
    """Manifest-ordered values of the current state."""
    st, lay = cs.effect_state, cs.layout
    var_a, var_b = float(st.ab_cov[0, 0]), float(st.ab_cov[1, 1])
    var_e = 1.0 if plan.family == "binary" else float(st.dyad_var)
    var_m = float(st.group_var) if plan.grouped else None
    vpc = partition(var_a, var_b, var_e, var_m)
    eta = _systematic(st, lay)
    if plan.family == "binary":
        ll = kernels.probit_loglik(lay.y, eta)
    elif plan.family == "count":
        ll = kernels.poisson_loglik(lay.y, eta + st.dyad_residuals)
    else:
        ll = gaussian_dyad_loglik(kernels.dyad_stats(lay.y - eta, lay.dyad_rows),
                                  st.dyad_var, st.dyad_corr)
    values = {
        "sigma2m": var_m, "sigma2a1": var_a, "sigma2b1": var_b, "sigma2e1": var_e,
        "rhoa1b1": ab_correlation(var_a, var_b, float(st.ab_cov[0, 1])),
        "rhoe1e1": float(st.dyad_corr),
        "pm": vpc.pm, "pa1": vpc.pa, "pb1": vpc.pb, "pe1": vpc.pe,
        "sigma2r": vpc.total, "deviance": -2.0 * ll,
    }
    out = np.empty(len(plan.manifest))
    out[:plan.n_beta] = st.beta
    for k, name in enumerate(plan.manifest[plan.n_beta:], start=plan.n_beta):
        out[k] = values[name]
    return out


def adaptation_gain(t):
    return (t + 1.0) ** -0.6


@dataclass
class PosteriorSamples:
    """Stored draws per chain, columns in manifest order."""

    manifest: tuple
    draws: list
    iterations: np.ndarray
    family: str
    grouped: bool
    n_beta: int
    metadata: dict = field(default_factory=dict)

    @property
    def n_chains(self):
        return len(self.draws)

    @property
    def n_per_chain(self):
        return self.draws[0].shape[0] if self.draws else 0

    def column(self, name):
        """``(n_chains, n_stored)`` array for one parameter."""
        k = self.manifest.index(name)
        return np.stack([d[:, k] for d in self.draws])

    def pooled(self, name=None):
        all_draws = np.concatenate(self.draws, axis=0)
        if name is None:
            return all_draws
        return all_draws[:, self.manifest.index(name)]

    def beta_draws(self):
        return self.pooled()[:, :self.n_beta]

    def to_csv(self, path):
        header = ["chain", "iteration", *self.manifest]
        lines = [",".join(header)]
        for c, d in enumerate(self.draws):
            for it, row in zip(self.iterations, d):
                lines.append(",".join([str(c), str(int(it))] + [repr(float(v)) for v in row]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path, family, grouped, metadata=None):
        text = Path(path).read_text(encoding="utf-8").splitlines()
        if len(text) < 2:
            raise EmptySamplesError(f"{path}: no stored draws")
        header = text[0].split(",")
        manifest = tuple(header[2:])
        chains, its, vals = [], [], []
        for line in text[1:]:
            parts = line.split(",")
            chains.append(int(parts[0]))
            its.append(int(parts[1]))
            vals.append([float(p) for p in parts[2:]])
        chains = np.array(chains)
        vals = np.array(vals)
        its = np.array(its)
        ids = sorted(set(chains.tolist()))
        draws = [vals[chains == c] for c in ids]
        n_beta = sum(1 for name in manifest if name.startswith("beta_"))
        return cls(manifest=manifest, draws=draws, iterations=its[chains == ids[0]],
                   family=family, grouped=grouped, n_beta=n_beta, metadata=metadata or {})


def _run_one(plan, chain_id, pinned=(), start=None, callback=None, log_every=0):
    settings = plan.config.chains
    t0 = time.perf_counter()
    cs = init_state(plan, chain_id, pinned=pinned, start=start)
    for t in range(settings.burnin):
        step_chain(cs, plan, adapt_gain=adaptation_gain(t))
        if log_every and (t + 1) % log_every == 0:
            log.info("chain %d: burn-in %d/%d", chain_id, t + 1, settings.burnin)
    cs.accept = {}
    n_store = settings.n_stored
    draws = np.empty((n_store, len(plan.manifest)))
    iters = np.empty(n_store, dtype=np.int64)
    k = 0
    for t in range(1, settings.iterations + 1):
        step_chain(cs, plan)
        if t % settings.thin == 0 and k < n_store:
            draws[k] = record(cs, plan)
            iters[k] = t
            k += 1
            if callback is not None:
                callback(chain_id, t, cs)
        if log_every and t % log_every == 0:
            log.info("chain %d: iteration %d/%d", chain_id, t, settings.iterations)
    rates = {blk: tot[0] / tot[1] for blk, tot in sorted(cs.accept.items()) if tot[1]}
    return draws, iters, rates, time.perf_counter() - t0


def default_workers():
    env = os.environ.get("MULTISRM_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"MULTISRM_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_chains(plan: ModelPlan, dataset=None, *, workers=None, pinned=(), start=None,
               callback=None, log_every=0) -> PosteriorSamples:
    """Run every chain of ``plan``; output is independent of ``workers``.

    ``pinned``, ``start`` and ``callback(chain_id, iteration, chain_state)``
    are inspection hooks; a callback forces serial execution.
    """
    if dataset is not None and dataset is not plan.dataset:
        raise ConfigurationError("dataset differs from the one the plan was built on")
    settings = plan.config.chains
    if settings.iterations < settings.thin:
        raise ConfigurationError("iterations < thin")
    workers = default_workers() if workers is None else int(workers)
    workers = max(1, min(workers, settings.n_chains))
    t0 = time.perf_counter()
    ids = list(range(settings.n_chains))
    if workers == 1 or callback is not None:
        results = [_run_one(plan, c, pinned, start, callback, log_every) for c in ids]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, plan, c, pinned, start, None, log_every) for c in ids]
            results = [f.result() for f in futures]
    meta = {
        "backend": BACKEND,
        "workers": workers,
        "wall_clock_seconds": time.perf_counter() - t0,
        "chain_seconds": [r[3] for r in results],
        "acceptance_rates": [r[2] for r in results],
        "settings": {"n_chains": settings.n_chains, "seed": settings.seed,
                     "burnin": settings.burnin, "iterations": settings.iterations,
                     "thin": settings.thin},
        "manifest": list(plan.manifest),
        "family": plan.family, "grouped": plan.grouped,
    }
    return PosteriorSamples(manifest=plan.manifest, draws=[r[0] for r in results],
                            iterations=results[0][1], family=plan.family, grouped=plan.grouped,
                            n_beta=plan.n_beta, metadata=meta)
