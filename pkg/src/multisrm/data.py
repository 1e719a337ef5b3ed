"""Long-format directed dyadic data: loading, indexing, validation.

One row per directed observation ``i -> j``. The dyad column is symmetric,
so a fully observed dyad contributes two rows carrying the same label.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDatasetError, ParseError, SchemaError

FAMILIES = ("binary", "count", "continuous")


@dataclass(frozen=True)
class Schema:
    """Column names in the input file.

    ``covariates=None`` loads every column not claimed by another role.
    """

    actor: str = "i_ID"
    partner: str = "j_ID"
    dyad: str = "ij_ID"
    response: str = "y"
    covariates: tuple[str, ...] | None = None
    group: str | None = None
    offset: str | None = None

    def roles(self):
        out = {"actor": self.actor, "partner": self.partner,
               "dyad": self.dyad, "response": self.response}
        if self.group is not None:
            out["group"] = self.group
        if self.offset is not None:
            out["offset"] = self.offset
        return out


@dataclass(frozen=True)
class ObservationRow:
    actor_label: str
    partner_label: str
    dyad_label: str
    group_label: str | None
    response: float
    covariates: tuple[float, ...]
    log_offset: float | None


def _intern(labels):
    index = {}
    codes = np.empty(len(labels), dtype=np.int64)
    for pos, lab in enumerate(labels):
        code = index.get(lab)
        if code is None:
            code = index[lab] = len(index)
        codes[pos] = code
    return index, codes


@dataclass(frozen=True, eq=False)
class DyadicDataset:
    """Indexed dyadic observations.

    Row-aligned integer arrays (``actor``, ``partner``, ``dyad``, ``group``)
    index into the label rosters. ``dyad_rows`` is ``(D, 2)``; the second
    column is ``-1`` for a dyad observed in one direction only.
    """

    actor_labels: tuple[str, ...]
    partner_labels: tuple[str, ...]
    dyad_labels: tuple[str, ...]
    group_labels: tuple[str, ...] | None
    response: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    log_offset: np.ndarray | None
    schema: Schema = field(default_factory=Schema)

    def __post_init__(self):
        n = len(self.actor_labels)
        if n == 0:
            raise EmptyDatasetError("dataset has no rows")
        for name in ("partner_labels", "dyad_labels"):
            if len(getattr(self, name)) != n:
                raise SchemaError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if self.group_labels is not None and len(self.group_labels) != n:
            raise SchemaError("group_labels length mismatch")
        resp = np.asarray(self.response, dtype=float)
        cov = np.asarray(self.covariates, dtype=float).reshape(n, -1)
        if cov.shape[1] != len(self.covariate_names):
            raise SchemaError("covariate matrix width does not match covariate_names")
        off = None if self.log_offset is None else np.asarray(self.log_offset, dtype=float)
        for arr in (resp, cov, off):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "response", resp)
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "log_offset", off)

        node_index, _ = _intern(list(self.actor_labels) + list(self.partner_labels))
        actor = np.fromiter((node_index[x] for x in self.actor_labels), np.int64, n)
        partner = np.fromiter((node_index[x] for x in self.partner_labels), np.int64, n)
        dyad_index, dyad = _intern(self.dyad_labels)
        rows = np.full((len(dyad_index), 2), -1, dtype=np.int64)
        extra = []
        for r, d in enumerate(dyad):
            if rows[d, 0] < 0:
                rows[d, 0] = r
            elif rows[d, 1] < 0:
                rows[d, 1] = r
            else:
                extra.append(r)
        if self.group_labels is not None:
            group_index, group = _intern(self.group_labels)
        else:
            group_index, group = None, np.zeros(n, dtype=np.int64)
        for name, arr in (("actor", actor), ("partner", partner), ("dyad", dyad),
                          ("group", group), ("dyad_rows", rows)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "node_index", node_index)
        object.__setattr__(self, "dyad_index", dyad_index)
        object.__setattr__(self, "group_index", group_index)
        object.__setattr__(self, "overflow_rows", tuple(extra))

    @property
    def n_rows(self):
        return len(self.actor_labels)

    @property
    def n_nodes(self):
        return len(self.node_index)

    @property
    def n_dyads(self):
        return len(self.dyad_index)

    @property
    def n_groups(self):
        return 0 if self.group_index is None else len(self.group_index)

    @property
    def grouped(self):
        return self.group_index is not None

    def dyad_pair(self, d):
        """Unordered node pair of dyad ``d`` as given by its first row."""
        r = self.dyad_rows[d, 0]
        return frozenset((int(self.actor[r]), int(self.partner[r])))

    def row(self, r):
        return ObservationRow(
            actor_label=self.actor_labels[r],
            partner_label=self.partner_labels[r],
            dyad_label=self.dyad_labels[r],
            group_label=None if self.group_labels is None else self.group_labels[r],
            response=float(self.response[r]),
            covariates=tuple(float(v) for v in self.covariates[r]),
            log_offset=None if self.log_offset is None else float(self.log_offset[r]),
        )

    def rows(self):
        return [self.row(r) for r in range(self.n_rows)]

    def covariate_column(self, name):
        try:
            return self.covariates[:, self.covariate_names.index(name)]
        except ValueError:
            raise SchemaError(f"no covariate column {name!r}") from None


def _parse_float(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}: column {column!r}: non-numeric value {text!r}") from None


def load_dataset(path, schema: Schema | None = None) -> DyadicDataset:
    """Read a comma-separated long-format file with one header row."""
    schema = schema or Schema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        body = [rec for rec in reader if rec and any(c.strip() for c in rec)]

    col = {name: k for k, name in enumerate(header)}
    for role, name in schema.roles().items():
        if name not in col:
            raise SchemaError(f"missing {role} column {name!r}")
    claimed = set(schema.roles().values())
    if schema.covariates is None:
        cov_names = tuple(h for h in header if h not in claimed)
    else:
        cov_names = tuple(schema.covariates)
        for name in cov_names:
            if name not in col:
                raise SchemaError(f"missing covariate column {name!r}")
    if not body:
        raise EmptyDatasetError(f"{path}: no data rows")

    n = len(body)
    actors, partners, dyads, groups = [], [], [], []
    response = np.empty(n)
    cov = np.empty((n, len(cov_names)))
    offset = np.empty(n) if schema.offset is not None else None
    for r, rec in enumerate(body):
        rownum = r + 1
        if len(rec) != len(header):
            raise ParseError(f"row {rownum}: expected {len(header)} fields, got {len(rec)}")
        actors.append(rec[col[schema.actor]].strip())
        partners.append(rec[col[schema.partner]].strip())
        dyads.append(rec[col[schema.dyad]].strip())
        if schema.group is not None:
            groups.append(rec[col[schema.group]].strip())
        response[r] = _parse_float(rec[col[schema.response]], rownum, schema.response)
        for k, name in enumerate(cov_names):
            cov[r, k] = _parse_float(rec[col[name]], rownum, name)
        if offset is not None:
            offset[r] = _parse_float(rec[col[schema.offset]], rownum, schema.offset)

    return DyadicDataset(
        actor_labels=tuple(actors), partner_labels=tuple(partners),
        dyad_labels=tuple(dyads),
        group_labels=tuple(groups) if schema.group is not None else None,
        response=response, covariates=cov, covariate_names=cov_names,
        log_offset=offset,
        schema=Schema(schema.actor, schema.partner, schema.dyad, schema.response,
                      cov_names, schema.group, schema.offset),
    )


def write_dataset(dataset: DyadicDataset, path):
    """Write ``dataset`` in the format ``load_dataset`` reads. Floats round-trip."""
    s = dataset.schema
    header = [s.actor, s.partner, s.dyad]
    if dataset.grouped:
        header.append(s.group or "k_ID")
    header.append(s.response)
    header.extend(dataset.covariate_names)
    if dataset.log_offset is not None:
        header.append(s.offset or "log_offset")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in range(dataset.n_rows):
            rec = [dataset.actor_labels[r], dataset.partner_labels[r], dataset.dyad_labels[r]]
            if dataset.grouped:
                rec.append(dataset.group_labels[r])
            rec.append(repr(float(dataset.response[r])))
            rec.extend(repr(float(v)) for v in dataset.covariates[r])
            if dataset.log_offset is not None:
                rec.append(repr(float(dataset.log_offset[r])))
            w.writerow(rec)


@dataclass(frozen=True)
class Violation:
    kind: str
    row: int  # 1-based data row; 0 when not tied to one row
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.kind},{self.row},{self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def errors(self):
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self):
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self):
        return not self.errors

    def kinds(self):
        return {v.kind for v in self.violations}

    def to_text(self):
        return "".join(f"{v}\n" for v in self.violations)

    def __len__(self):
        return len(self.violations)


def validate(dataset: DyadicDataset, family: str) -> ValidationReport:
    """Check structural and family constraints; never raises for data problems."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    out = []
    add = out.append
    seen_pairs = {}
    first_pair = {}
    dyad_count = {}
    dyad_group = {}
    for r in range(dataset.n_rows):
        rn = r + 1
        i, j = dataset.actor_labels[r], dataset.partner_labels[r]
        d = dataset.dyad_labels[r]
        if i == j:
            add(Violation("self_tie", rn, f"actor and partner are both {i!r}"))
        if (i, j) in seen_pairs:
            add(Violation("duplicate_ordered_pair", rn,
                          f"pair ({i!r}, {j!r}) already observed at row {seen_pairs[(i, j)]}"))
        else:
            seen_pairs[(i, j)] = rn
        pair = frozenset((i, j))
        if d in first_pair:
            if first_pair[d] != pair:
                add(Violation("dyad_pair_mismatch", rn,
                              f"dyad {d!r} attached to ({i!r}, {j!r}) but earlier to "
                              f"{tuple(sorted(first_pair[d]))!r}"))
        else:
            first_pair[d] = pair
        dyad_count[d] = dyad_count.get(d, 0) + 1
        if dyad_count[d] == 3:
            add(Violation("dyad_overflow", rn, f"dyad {d!r} has more than two rows"))
        if dataset.grouped:
            g = dataset.group_labels[r]
            if d in dyad_group and dyad_group[d] != g:
                add(Violation("group_inconsistent", rn,
                              f"dyad {d!r} carries groups {dyad_group[d]!r} and {g!r}"))
            dyad_group.setdefault(d, g)

        y = dataset.response[r]
        if not math.isfinite(y):
            add(Violation("non_finite_response", rn, f"response {y!r}"))
        elif family == "binary" and y not in (0.0, 1.0):
            add(Violation("response_not_binary", rn, f"response {y!r} not in {{0,1}}"))
        elif family == "count" and (y < 0 or y != math.floor(y)):
            add(Violation("response_not_count", rn, f"response {y!r} is not a non-negative integer"))
        bad = [dataset.covariate_names[k] for k in np.flatnonzero(~np.isfinite(dataset.covariates[r]))]
        if bad:
            add(Violation("non_finite_covariate", rn, f"non-finite value in {', '.join(bad)}"))
        if dataset.log_offset is not None and not math.isfinite(dataset.log_offset[r]):
            add(Violation("non_finite_offset", rn, f"log offset {dataset.log_offset[r]!r}"))

    if dataset.grouped:
        node_group = {}
        for r in range(dataset.n_rows):
            g = dataset.group_labels[r]
            for node in (dataset.actor_labels[r], dataset.partner_labels[r]):
                if node_group.setdefault(node, g) != g:
                    add(Violation("node_group_inconsistent", r + 1,
                                  f"node {node!r} appears in groups {node_group[node]!r} and {g!r}"))
    if dataset.log_offset is not None and family != "count":
        add(Violation("offset_non_count", 0,
                      f"offset supplied for {family} family; it will be ignored", "warning"))
    return ValidationReport(out)
