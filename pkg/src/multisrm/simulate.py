"""Synthetic round-robin datasets drawn from known SRM parameters."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import FAMILIES, DyadicDataset, Schema
from .errors import ParameterError
from .srmmath import ab_correlation, partition


@dataclass(frozen=True)
class TrueParameters:
    """Generating values. ``group_var=None`` means a single-group design.

    ``beta[0]`` multiplies the constant; each further entry gets its own
    standard-normal covariate column ``x1``, ``x2``, ...
    """

    family: str
    beta: tuple[float, ...]
    ab_cov: tuple[tuple[float, float], tuple[float, float]]
    dyad_var: float = 1.0
    dyad_corr: float = 0.0
    group_var: float | None = None
    n_nodes: int = 20
    n_groups: int = 1
    offset_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not self.beta:
            raise ParameterError("beta needs at least the intercept")
        cov = np.asarray(self.ab_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ParameterError("ab_cov must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(cov).min() < -1e-12:
            raise ParameterError("ab_cov is not positive semi-definite")
        if self.family == "binary" and self.dyad_var != 1.0:
            raise ParameterError("binary family has dyad_var fixed at 1")
        if self.dyad_var < 0 or not -1.0 < self.dyad_corr < 1.0:
            raise ParameterError("need dyad_var >= 0 and -1 < dyad_corr < 1")
        if self.group_var is not None and self.group_var < 0:
            raise ParameterError("group_var must be non-negative")
        if self.n_nodes < 2 or self.n_groups < 1:
            raise ParameterError("need n_nodes >= 2 and n_groups >= 1")
        if self.group_var is None and self.n_groups != 1:
            raise ParameterError("several groups need a group_var")
        if self.offset_range is not None:
            if self.family != "count":
                raise ParameterError("offsets only apply to the count family")
            lo, hi = self.offset_range
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ParameterError(f"bad offset range {self.offset_range}")

    @classmethod
    def from_variances(cls, family, beta, var_a, var_b, rho_ab, **kw):
        cab = rho_ab * math.sqrt(var_a * var_b)
        return cls(family=family, beta=tuple(beta), ab_cov=((var_a, cab), (cab, var_b)), **kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "ab_cov" not in d:
            try:
                va, vb, r = d.pop("var_a"), d.pop("var_b"), d.pop("rho_ab", 0.0)
            except KeyError as exc:
                raise ParameterError(f"params need ab_cov or var_a/var_b (missing {exc})") from None
            return cls.from_variances(d.pop("family"), d.pop("beta"), va, vb, r, **_tuples(d))
        d["ab_cov"] = tuple(tuple(float(v) for v in r) for r in d["ab_cov"])
        d["beta"] = tuple(d["beta"])
        return cls(**_tuples(d))

    @property
    def grouped(self):
        return self.group_var is not None

    @property
    def covariate_names(self):
        return ("cons",) + tuple(f"x{k}" for k in range(1, len(self.beta)))

    def truth(self):
        """Flat mapping of true values under the output parameter names."""
        va, vb, cab = self.ab_cov[0][0], self.ab_cov[1][1], self.ab_cov[0][1]
        ve = 1.0 if self.family == "binary" else self.dyad_var
        vpc = partition(va, vb, ve, self.group_var)
        out = {f"beta_{p}": float(b) for p, b in enumerate(self.beta)}
        if self.grouped:
            out["sigma2m"] = float(self.group_var)
            out["pm"] = vpc.pm
        out.update(sigma2a1=va, sigma2b1=vb, rhoa1b1=ab_correlation(va, vb, cab),
                   rhoe1e1=float(self.dyad_corr), pa1=vpc.pa, pb1=vpc.pb, pe1=vpc.pe,
                   sigma2r=vpc.total)
        if self.family != "binary":
            out["sigma2e1"] = float(self.dyad_var)
        return out


def _tuples(d):
    if d.get("offset_range") is not None:
        d["offset_range"] = tuple(d["offset_range"])
    if "beta" in d:
        d["beta"] = tuple(d["beta"])
    return d


def simulate_dataset(params: TrueParameters, seed: int) -> DyadicDataset:
    """Fully observed round robin within each group, rows ordered actor-major."""
    rng = np.random.default_rng(seed)
    cov = np.asarray(params.ab_cov, dtype=float)
    n_cov = len(params.beta) - 1
    sd_e = math.sqrt(params.dyad_var)
    rho = params.dyad_corr
    actors, partners, dyads, groups = [], [], [], []
    ys, xs, offs = [], [], []
    for k in range(params.n_groups):
        m_k = rng.normal(0.0, math.sqrt(params.group_var)) if params.grouped else 0.0
        ab = rng.multivariate_normal(np.zeros(2), cov, size=params.n_nodes, method="eigh")
        names = [f"n{k * params.n_nodes + i}" for i in range(params.n_nodes)]
        # residual pair and exposure are shared by both directions of a dyad
        resid, expo = {}, {}
        for i in range(params.n_nodes):
            for j in range(i + 1, params.n_nodes):
                z1, z2 = rng.standard_normal(2)
                resid[i, j] = sd_e * z1
                resid[j, i] = sd_e * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
                if params.offset_range is not None:
                    expo[i, j] = expo[j, i] = rng.uniform(*params.offset_range)
        for i in range(params.n_nodes):
            for j in range(params.n_nodes):
                if i == j:
                    continue
                x = np.concatenate([[1.0], rng.standard_normal(n_cov)])
                eta = float(x @ np.asarray(params.beta)) + m_k + ab[i, 0] + ab[j, 1]
                off = expo.get((i, j), 0.0)
                latent = eta + resid[i, j]
                if params.family == "binary":
                    y = 1.0 if latent >= 0 else 0.0
                elif params.family == "count":
                    y = float(rng.poisson(math.exp(latent + off)))
                else:
                    y = latent
                lo, hi = min(i, j), max(i, j)
                actors.append(names[i])
                partners.append(names[j])
                dyads.append(f"d{names[lo]}_{names[hi]}")
                groups.append(f"g{k}")
                ys.append(y)
                xs.append(x)
                offs.append(off)
    schema = Schema(covariates=params.covariate_names,
                    group="k_ID" if params.grouped else None,
                    offset="log_offset" if params.offset_range is not None else None)
    return DyadicDataset(
        actor_labels=tuple(actors), partner_labels=tuple(partners), dyad_labels=tuple(dyads),
        group_labels=tuple(groups) if params.grouped else None,
        response=np.array(ys), covariates=np.array(xs),
        covariate_names=params.covariate_names,
        log_offset=np.array(offs) if params.offset_range is not None else None,
        schema=schema,
    )


def write_truth(params: TrueParameters, seed, path):
    doc = {"seed": seed, "params": asdict(params), "truth": params.truth()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_params(path) -> TrueParameters:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc})") from None
    return TrueParameters.from_dict(doc.get("params", doc))
