"""Model configuration, priors, chain settings and the resolved plan."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import FAMILIES, DyadicDataset, validate
from .errors import ConfigurationError, UnknownCovariateError, ValidationError


@dataclass(frozen=True)
class PriorSpec:
    """Hyperpriors.

    The actor-partner covariance gets an inverse-Wishart prior with scale
    ``ab_prior_df * ab_prior_guess`` and ``ab_prior_df`` degrees of freedom.
    ``ab_prior_guess`` is stored as the lower triangle ``(var_a, cov_ab, var_b)``.
    """

    ab_prior_guess: tuple[float, float, float] = (0.5, 0.0, 0.5)
    ab_prior_df: float = 2.0
    scalar_variance_shape: float = 0.001
    scalar_variance_rate: float = 0.001
    fixed_effect_prior: str = "uniform"

    def __post_init__(self):
        guess = tuple(float(v) for v in self.ab_prior_guess)
        if len(guess) != 3:
            raise ConfigurationError("prior guess needs three values: var_a, cov_ab, var_b")
        object.__setattr__(self, "ab_prior_guess", guess)
        if not np.all(np.linalg.eigvalsh(self.guess_matrix) > 0):
            raise ConfigurationError(f"prior guess {guess} is not positive definite")
        if not self.ab_prior_df >= 2:
            raise ConfigurationError("Wishart degrees of freedom must be >= 2")
        if self.scalar_variance_shape <= 0 or self.scalar_variance_rate <= 0:
            raise ConfigurationError("inverse-gamma hyperparameters must be positive")
        if self.fixed_effect_prior != "uniform":
            raise ConfigurationError("only the improper uniform fixed-effect prior is supported")

    @property
    def guess_matrix(self):
        va, cab, vb = self.ab_prior_guess
        return np.array([[va, cab], [cab, vb]])

    @property
    def iw_scale(self):
        return self.ab_prior_df * self.guess_matrix


@dataclass(frozen=True)
class ChainSettings:
    n_chains: int = 3
    seed: int = 1
    burnin: int = 50_000
    iterations: int = 100_000
    thin: int = 20

    def __post_init__(self):
        if self.n_chains < 1:
            raise ConfigurationError("need at least one chain")
        if self.burnin < 0:
            raise ConfigurationError("burn-in must be non-negative")
        if self.iterations < 1 or self.thin < 1:
            raise ConfigurationError("iterations and thin must be positive")
        if self.iterations < self.thin:
            raise ConfigurationError(
                f"iterations ({self.iterations}) < thin ({self.thin}) stores nothing")

    @property
    def n_stored(self):
        return self.iterations // self.thin


@dataclass(frozen=True)
class ModelConfig:
    family: str
    covariates: tuple[str, ...] = ("cons",)
    grouped: bool = False
    offset: str | None = None
    prior: PriorSpec = field(default_factory=PriorSpec)
    chains: ChainSettings = field(default_factory=ChainSettings)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if not self.covariates:
            raise ConfigurationError("at least one covariate (the constant) is required")
        if len(set(self.covariates)) != len(self.covariates):
            raise ConfigurationError("duplicate covariate names")
        if self.offset is not None and self.family != "count":
            raise ConfigurationError(f"an offset is only allowed for the count family, not {self.family}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["prior"] = PriorSpec(**d.get("prior", {}))
        d["chains"] = ChainSettings(**d.get("chains", {}))
        return cls(**d)

    def with_chains(self, **kw):
        return replace(self, chains=replace(self.chains, **kw))


def parameter_manifest(family, grouped, n_beta):
    """Output column names in storage order."""
    names = [f"beta_{p}" for p in range(n_beta)]
    if grouped:
        names.append("sigma2m")
    names += ["sigma2a1", "sigma2b1"]
    if family != "binary":
        names.append("sigma2e1")
    names += ["rhoa1b1", "rhoe1e1"]
    if grouped:
        names.append("pm")
    names += ["pa1", "pb1", "pe1", "sigma2r", "deviance"]
    return tuple(names)


@dataclass(frozen=True, eq=False)
class ModelPlan:
    config: ModelConfig
    dataset: DyadicDataset
    covariate_indices: tuple[int, ...]
    use_offset: bool
    manifest: tuple[str, ...]

    @property
    def family(self):
        return self.config.family

    @property
    def grouped(self):
        return self.config.grouped

    @property
    def n_beta(self):
        return len(self.covariate_indices)

    @property
    def design(self):
        return self.dataset.covariates[:, list(self.covariate_indices)]

    @property
    def offset(self):
        if self.use_offset:
            return self.dataset.log_offset
        return np.zeros(self.dataset.n_rows)

    def column(self, name):
        return self.manifest.index(name)


def build_model(config: ModelConfig, dataset: DyadicDataset) -> ModelPlan:
    """Resolve ``config`` against ``dataset``; raises on any fatal problem."""
    indices = []
    for name in config.covariates:
        if name not in dataset.covariate_names:
            raise UnknownCovariateError(f"covariate {name!r} not in dataset "
                                        f"(available: {', '.join(dataset.covariate_names)})")
        indices.append(dataset.covariate_names.index(name))
    if config.grouped and not dataset.grouped:
        raise ConfigurationError("grouped model requested but the dataset has no group column")
    if config.offset is not None:
        if dataset.log_offset is None or dataset.schema.offset != config.offset:
            raise ConfigurationError(f"offset column {config.offset!r} was not loaded")
    report = validate(dataset, config.family)
    if not report.ok:
        first = report.errors[0]
        raise ValidationError(f"{len(report.errors)} data violation(s); first: {first}")
    x = dataset.covariates[:, indices]
    if np.linalg.matrix_rank(x) < len(indices):
        raise ConfigurationError("covariate matrix is rank deficient")
    if not any(np.all(x[:, k] == x[0, k]) and x[0, k] != 0 for k in range(x.shape[1])):
        raise ConfigurationError("no constant column among the covariates")
    return ModelPlan(
        config=config, dataset=dataset, covariate_indices=tuple(indices),
        use_offset=config.offset is not None,
        manifest=parameter_manifest(config.family, config.grouped, len(indices)),
    )


# flat key=value configuration ------------------------------------------------

_KEYS = ("family", "covariates", "grouped", "offset", "prior_guess", "prior_df",
         "variance_shape", "variance_rate", "chains", "seed", "burnin",
         "iterations", "thin")


def config_to_kv(config: ModelConfig, extra=None):
    p, c = config.prior, config.chains
    items = [
        ("family", config.family),
        ("covariates", ",".join(config.covariates)),
        ("grouped", "true" if config.grouped else "false"),
        ("offset", config.offset or ""),
        ("prior_guess", ",".join(repr(v) for v in p.ab_prior_guess)),
        ("prior_df", repr(float(p.ab_prior_df))),
        ("variance_shape", repr(float(p.scalar_variance_shape))),
        ("variance_rate", repr(float(p.scalar_variance_rate))),
        ("chains", str(c.n_chains)),
        ("seed", str(c.seed)),
        ("burnin", str(c.burnin)),
        ("iterations", str(c.iterations)),
        ("thin", str(c.thin)),
    ]
    items += list((extra or {}).items())
    return "".join(f"{k} = {v}\n" for k, v in items)


def parse_kv(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def config_from_kv(kv):
    """Build a ModelConfig from parsed key/value pairs; unknown keys are ignored."""
    def num(key, cast, default):
        if not kv.get(key):
            return default
        try:
            return cast(kv[key])
        except ValueError:
            raise ConfigurationError(f"bad value for {key}: {kv[key]!r}") from None

    if "family" not in kv:
        raise ConfigurationError("config is missing 'family'")
    guess = PriorSpec().ab_prior_guess
    if kv.get("prior_guess"):
        guess = parse_prior_guess(kv["prior_guess"])
    grouped = kv.get("grouped", "false").lower()
    if grouped not in {"true", "false", "1", "0", "yes", "no"}:
        raise ConfigurationError(f"bad value for grouped: {grouped!r}")
    defaults = ChainSettings()
    return ModelConfig(
        family=kv["family"],
        covariates=tuple(c.strip() for c in kv.get("covariates", "cons").split(",") if c.strip()),
        grouped=grouped in {"true", "1", "yes"},
        offset=kv.get("offset") or None,
        prior=PriorSpec(
            ab_prior_guess=guess,
            ab_prior_df=num("prior_df", float, 2.0),
            scalar_variance_shape=num("variance_shape", float, 0.001),
            scalar_variance_rate=num("variance_rate", float, 0.001),
        ),
        chains=ChainSettings(
            n_chains=num("chains", int, defaults.n_chains),
            seed=num("seed", int, defaults.seed),
            burnin=num("burnin", int, defaults.burnin),
            iterations=num("iterations", int, defaults.iterations),
            thin=num("thin", int, defaults.thin),
        ),
    )


def parse_prior_guess(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise ConfigurationError(f"prior guess needs 3 comma-separated values, got {text!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"prior guess is not numeric: {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigurationError("prior guess must be finite")
    return vals
