"""Cluster-specific predictions: random effects held at their zero means."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import AlignmentError, ConfigurationError, ScenarioError
from .srmmath import inverse_link


@dataclass(frozen=True)
class PredictionScenario:
    """Covariate values for one prediction, optionally swept over a grid.

    ``products`` maps a column name to the names of the columns whose
    product it is; those columns are recomputed after the grid value is
    substituted, in declaration order.
    """

    covariate_names: tuple[str, ...]
    values: tuple[float, ...]
    grid_name: str | None = None
    grid: tuple[float, ...] = ()
    products: tuple[tuple[str, tuple[str, ...]], ...] = ()
    log_offset: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "products",
                           tuple((k, tuple(f)) for k, f in self.products))
        if len(self.values) != len(self.covariate_names):
            raise AlignmentError(f"{len(self.values)} values for "
                                 f"{len(self.covariate_names)} covariates")
        names = set(self.covariate_names)
        if self.grid_name is not None:
            if self.grid_name not in names:
                raise AlignmentError(f"grid covariate {self.grid_name!r} is not in the model")
            if not self.grid:
                raise ScenarioError("grid is empty")
        for col, factors in self.products:
            missing = [c for c in (col, *factors) if c not in names]
            if missing:
                raise AlignmentError(f"product rule for {col!r} names unknown "
                                     f"column(s) {', '.join(missing)}")

    def _apply_products(self, x):
        idx = {n: k for k, n in enumerate(self.covariate_names)}
        for col, factors in self.products:
            x[..., idx[col]] = np.prod([x[..., idx[f]] for f in factors], axis=0)
        return x

    def point_design(self):
        return self._apply_products(np.array(self.values, dtype=float))

    def grid_design(self):
        """``(G, P)`` design with the grid column swept and products recomputed."""
        if self.grid_name is None:
            return self.point_design()[None, :]
        x = np.tile(np.array(self.values, dtype=float), (len(self.grid), 1))
        x[:, self.covariate_names.index(self.grid_name)] = self.grid
        return self._apply_products(x)

    def align(self, model_names):
        """Reorder onto ``model_names``; every model column must be given."""
        model_names = tuple(model_names)
        missing = [n for n in model_names if n not in self.covariate_names]
        extra = [n for n in self.covariate_names if n not in model_names]
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing {', '.join(missing)}")
            if extra:
                parts.append(f"not in model: {', '.join(extra)}")
            raise AlignmentError("scenario does not match the model covariates ("
                                 + "; ".join(parts) + ")")
        lookup = dict(zip(self.covariate_names, self.values))
        return replace(self, covariate_names=model_names,
                       values=tuple(lookup[n] for n in model_names))


def _offset(scenario, family):
    if scenario.log_offset is None:
        return 0.0
    if family != "count":
        raise ConfigurationError("an offset only applies to the count family")
    return float(scenario.log_offset)


def point_prediction(beta_means, scenario: PredictionScenario, family):
    """``inverse_link(x'beta + offset)`` at the scenario's base values."""
    beta = np.asarray(beta_means, dtype=float)
    if beta.shape != (len(scenario.values),):
        raise AlignmentError(f"scenario has {len(scenario.values)} values but there are "
                             f"{beta.size} coefficients")
    eta = float(scenario.point_design() @ beta) + _offset(scenario, family)
    return inverse_link(eta, family)


@dataclass(frozen=True)
class PredictionCurve:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    interval: float

    def to_csv(self) -> str:
        lines = ["grid_value,mean,lower,upper"]
        for row in zip(self.grid, self.mean, self.lower, self.upper):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def curve_from_draws(beta_draws, scenario: PredictionScenario, family, interval=0.95):
    """Prediction curve from an ``(S, P)`` array of coefficient draws."""
    if not 0.0 < interval < 1.0:
        raise ConfigurationError(f"interval must lie in (0, 1), got {interval}")
    draws = np.atleast_2d(np.asarray(beta_draws, dtype=float))
    if draws.shape[1] != len(scenario.values):
        raise AlignmentError(f"draws have {draws.shape[1]} coefficients but the scenario "
                             f"has {len(scenario.values)} values")
    if draws.shape[0] == 0:
        raise AlignmentError("no draws")
    x = scenario.grid_design()
    pred = inverse_link(x @ draws.T + _offset(scenario, family), family)
    pred = np.atleast_2d(pred)
    tail = (1.0 - interval) / 2.0
    lower, upper = np.quantile(pred, [tail, 1.0 - tail], axis=1, method="linear")
    grid = np.array(scenario.grid) if scenario.grid_name else np.array([math.nan])
    return PredictionCurve(grid=grid, mean=pred.mean(axis=1), lower=lower, upper=upper,
                           interval=interval)


def prediction_curve(samples, scenario: PredictionScenario, family=None, interval=0.95):
    """Evaluate the scenario for every stored draw across all chains."""
    return curve_from_draws(samples.beta_draws(), scenario, family or samples.family, interval)


# scenario files ---------------------------------------------------------------

_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")


def _number(text, lineno):
    try:
        v = float(text)
    except ValueError:
        raise ScenarioError(f"scenario line {lineno}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ScenarioError(f"scenario line {lineno}: value must be finite")
    return v


def parse_scenario(text):
    """Parse scenario text. Returns ``(scenario, interval)``.

    Recognized lines (``#`` starts a comment)::

        cons = 1
        grid salary = linspace(-2, 2, 41)     # or a comma list
        product salary_x_tenure = salary * tenure
        offset = 0.0
        interval = 0.95
    """
    names, values, products = [], [], []
    grid_name, grid, offset, interval = None, (), None, 0.95
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"scenario line {lineno}: expected 'name = value'")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        head, _, name = lhs.partition(" ")
        name = name.strip()
        if head == "grid" and name:
            if grid_name is not None:
                raise ScenarioError(f"scenario line {lineno}: only one grid is allowed")
            m = _LINSPACE.match(rhs)
            if m:
                lo, hi = _number(m.group(1), lineno), _number(m.group(2), lineno)
                n = _number(m.group(3), lineno)
                if n < 1 or n != int(n):
                    raise ScenarioError(f"scenario line {lineno}: grid size must be a positive integer")
                grid = tuple(np.linspace(lo, hi, int(n)))
            else:
                grid = tuple(_number(p.strip(), lineno) for p in rhs.split(",") if p.strip())
            if not grid:
                raise ScenarioError(f"scenario line {lineno}: empty grid")
            grid_name = name
            if name not in names:
                names.append(name)
                values.append(grid[0])
        elif head == "product" and name:
            factors = tuple(f.strip() for f in rhs.split("*"))
            if len(factors) < 2 or not all(factors):
                raise ScenarioError(f"scenario line {lineno}: product needs 'a * b'")
            products.append((name, factors))
            if name not in names:
                names.append(name)
                values.append(0.0)
        elif lhs == "offset":
            offset = _number(rhs, lineno)
        elif lhs == "interval":
            interval = _number(rhs, lineno)
        elif " " in lhs or not lhs:
            raise ScenarioError(f"scenario line {lineno}: unrecognized declaration {lhs!r}")
        else:
            v = _number(rhs, lineno)
            if lhs in names:
                values[names.index(lhs)] = v
            else:
                names.append(lhs)
                values.append(v)
    if not names:
        raise ScenarioError("scenario declares no covariates")
    try:
        scenario = PredictionScenario(tuple(names), tuple(values), grid_name, grid,
                                      tuple(products), offset)
    except AlignmentError as exc:
        raise ScenarioError(str(exc)) from None
    return scenario, interval


def read_scenario(path):
    return parse_scenario(Path(path).read_text(encoding="utf-8"))
