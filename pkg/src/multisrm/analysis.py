"""Posterior summaries, effective sample size and convergence diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .errors import EmptySamplesError, ValidationError

MIN_DRAWS = 10
SUMMARY_HEADER = ("parameter", "mean", "sd", "ess", "rhat")


@dataclass(frozen=True)
class ParameterSummary:
    name: str
    mean: float
    sd: float
    ess: float
    chain_means: tuple[float, ...]
    rhat: float


def _as_chain(chain):
    x = np.asarray(chain, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d chain, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("chain contains non-finite values")
    return x


def autocorrelation(chain, max_lag=None):
    """Sample autocorrelations at lags 0..max_lag via zero-padded FFT.

    Uses the biased (divide by n) autocovariance, which keeps the sequence
    positive semi-definite. A constant chain gives 1 at lag 0 and 0 after.
    """
    x = _as_chain(chain)
    n = x.size
    max_lag = n - 1 if max_lag is None else min(int(max_lag), n - 1)
    x = x - x.mean()
    var = float(x @ x) / n
    if var <= 0 or not math.isfinite(var):
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:max_lag + 1] / n
    return acov / acov[0]


def effective_sample_size(chain) -> float:
    """ESS by Geyer's initial positive sequence.

    Autocorrelations are summed in adjacent pairs (rho_2m + rho_2m+1) until
    the first pair whose sum is non-positive. The result is capped at n.
    """
    x = _as_chain(chain)
    n = x.size
    if n < MIN_DRAWS:
        raise EmptySamplesError(f"need at least {MIN_DRAWS} draws for ESS, got {n}")
    if np.ptp(x) == 0:
        return float(n)
    rho = autocorrelation(x)
    total = 0.0
    for m in range(0, n - 1, 2):
        pair = rho[m] + rho[m + 1]
        if pair <= 0:
            break
        total += pair
    # sum of pairs from lag 0 equals 1 + 2 * sum_{k>=1} rho_k after rearranging
    tau = 2.0 * total - 1.0
    if tau <= 0:
        return float(n)
    return float(min(n / tau, n))


def _split(chains):
    n = chains.shape[1] // 2
    return np.concatenate([chains[:, :n], chains[:, chains.shape[1] - n:]], axis=0)


def split_rhat(chains) -> float:
    """Rank-normalized split potential scale reduction.

    ``chains`` is ``(n_chains, n_draws)``. Draws are pooled and ranked,
    mapped to normal scores, each chain is halved, and the classic
    between/within ratio is taken. NaN for fewer than two chains.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        return math.nan
    if not np.all(np.isfinite(x)):
        raise ValidationError("chains contain non-finite values")
    if np.ptp(x) == 0:
        return 1.0
    ranks = rankdata(x, method="average").reshape(x.shape)
    z = ndtri((ranks - 0.375) / (x.size + 0.25))
    z = _split(z)
    n = z.shape[1]
    means = z.mean(axis=1)
    w = z.var(axis=1, ddof=1).mean()
    b = n * means.var(ddof=1)
    if w <= 0:
        return math.nan
    var_plus = (n - 1) / n * w + b / n
    return float(math.sqrt(var_plus / w))


def _check_samples(samples):
    if samples.n_chains == 0 or samples.n_per_chain == 0:
        raise EmptySamplesError("no stored draws")
    if samples.n_per_chain < MIN_DRAWS:
        raise EmptySamplesError(
            f"need at least {MIN_DRAWS} stored draws per chain, got {samples.n_per_chain}")


def summarize(samples) -> list[ParameterSummary]:
    """One row per manifest parameter, in manifest order.

    Derived quantities (VPCs, correlations, sigma2r) are averaged over their
    per-iteration stored values.
    """
    _check_samples(samples)
    out = []
    for name in samples.manifest:
        cols = samples.column(name)
        pooled = cols.ravel()
        sd = float(pooled.std(ddof=1)) if pooled.size > 1 else 0.0
        ess = sum(effective_sample_size(c) for c in cols)
        out.append(ParameterSummary(
            name=name, mean=float(pooled.mean()), sd=sd, ess=float(ess),
            chain_means=tuple(float(c.mean()) for c in cols),
            rhat=split_rhat(cols),
        ))
    return out


def summary_table(summaries) -> str:
    lines = [",".join(SUMMARY_HEADER)]
    for s in summaries:
        lines.append(",".join([s.name, repr(s.mean), repr(s.sd), repr(s.ess), repr(s.rhat)]))
    return "\n".join(lines) + "\n"


def write_summary(summaries, path):
    Path(path).write_text(summary_table(summaries), encoding="utf-8")


def read_summary(path) -> dict:
    """``{name: (mean, sd, ess, rhat)}`` from a summary file."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != SUMMARY_HEADER:
        raise ValidationError(f"{path}: not a summary file")
    out = {}
    for line in lines[1:]:
        name, *vals = line.split(",")
        out[name] = tuple(float(v) for v in vals)
    return out


@dataclass(frozen=True)
class ConvergenceReport:
    rhat: dict
    traces: dict
    acf: dict
    iterations: np.ndarray

    def trace_csv(self, name) -> str:
        lines = ["iteration,chain,value"]
        for c, chain in enumerate(self.traces[name]):
            lines += [f"{int(it)},{c},{float(v)!r}" for it, v in zip(self.iterations, chain)]
        return "\n".join(lines) + "\n"

    def acf_csv(self, name) -> str:
        lines = ["lag,chain,acf"]
        for c, rho in enumerate(self.acf[name]):
            lines += [f"{k},{c},{float(r)!r}" for k, r in enumerate(rho)]
        return "\n".join(lines) + "\n"

    def rhat_csv(self) -> str:
        return "parameter,rhat\n" + "".join(f"{k},{v!r}\n" for k, v in self.rhat.items())

    def write(self, directory):
        """One trace and one ACF file per parameter plus ``rhat.csv``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "rhat.csv").write_text(self.rhat_csv(), encoding="utf-8")
        for name in self.traces:
            (d / f"trace_{name}.csv").write_text(self.trace_csv(name), encoding="utf-8")
            (d / f"acf_{name}.csv").write_text(self.acf_csv(name), encoding="utf-8")


def convergence_report(samples, max_lag=50) -> ConvergenceReport:
    if samples.n_chains == 0 or samples.n_per_chain == 0:
        raise EmptySamplesError("no stored draws")
    rhat, traces, acf = {}, {}, {}
    for name in samples.manifest:
        cols = samples.column(name)
        traces[name] = cols
        acf[name] = np.stack([autocorrelation(c, max_lag) for c in cols])
        rhat[name] = split_rhat(cols) if cols.shape[1] >= 4 else math.nan
    return ConvergenceReport(rhat=rhat, traces=traces, acf=acf,
                             iterations=np.asarray(samples.iterations))
