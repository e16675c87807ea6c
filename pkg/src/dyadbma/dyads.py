"""Node attributes and nominations in, dyadic design matrix out.

Every unordered pair of nodes becomes one row.  Regressors encode pairwise
similarity: the absolute difference of a numeric attribute, a dummy that is
one when both nodes carry a binary trait, or a match dummy for equal values.
The response is the reciprocal period-2 link; the reciprocal period-1 link is
available as a lagged regressor.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    EmptyResultError,
    IntegrityError,
    ParseError,
    SchemaError,
    SpecError,
)

logger = logging.getLogger(__name__)

LAG_NAME = "Friends_t-1"


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    BINARY = "binary"


class Transform(str, Enum):
    ABS_DIFF = "absdiff"
    SHARED_DUMMY = "shared"
    MATCH = "match"
    LAGGED = "lagged"


class Role(str, Enum):
    CANDIDATE = "candidate"
    ALWAYS = "always"


def _enum_value(enum_cls, token, what):
    if isinstance(token, enum_cls):
        return token
    if isinstance(token, Enum):
        token = token.value
    token = str(token).strip().lower()
    aliases = {"a": "absdiff", "d": "shared", "abs": "absdiff", "dummy": "shared",
               "alwaysincluded": "always", "fixed": "always"}
    token = aliases.get(token, token)
    try:
        return enum_cls(token)
    except ValueError:
        choices = ", ".join(m.value for m in enum_cls)
        raise SpecError(f"unknown {what} {token!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class AttributeTable:
    """Per-node attribute columns; ``nan`` marks a Missing cell."""

    node_ids: tuple
    columns: Mapping[str, np.ndarray]
    kinds: Mapping[str, ColumnKind]

    def __post_init__(self):
        ids = tuple(str(v) for v in self.node_ids)
        object.__setattr__(self, "node_ids", ids)
        if any(not v for v in ids):
            raise IntegrityError("empty node_id")
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for v in ids:
                if v in seen:
                    dup = v
                    break
                seen.add(v)
            raise IntegrityError(f"duplicate node_id {dup!r}")
        cols = {}
        kinds = {}
        for name, values in self.columns.items():
            if name not in self.kinds:
                raise SchemaError(f"column {name!r} has no declared kind")
            kind = ColumnKind(self.kinds[name])
            arr = np.asarray(values, dtype=float).copy()
            if arr.shape != (len(ids),):
                raise SchemaError(f"column {name!r} has {arr.size} cells, expected {len(ids)}")
            if kind is ColumnKind.BINARY:
                bad = ~np.isnan(arr) & (arr != 0) & (arr != 1)
                if bad.any():
                    k = int(np.flatnonzero(bad)[0])
                    raise SchemaError(
                        f"non-binary value {arr[k]!r} in binary column {name!r} (node {ids[k]!r})"
                    )
            arr.setflags(write=False)
            cols[name] = arr
            kinds[name] = kind
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "kinds", kinds)

    def __len__(self):
        return len(self.node_ids)

    def missing(self, name):
        return np.isnan(self.columns[name])


def load_attributes(path, schema, id_column=None, delimiter=","):
    """Read a delimited node file into an :class:`AttributeTable`.

    Parameters
    ----------
    path : str or Path
        UTF-8 text with a header row.  Empty cells are Missing.
    schema : mapping
        Column name -> ``"numeric"`` or ``"binary"``.  Columns absent from the
        schema are not loaded.
    id_column : str, optional
        Node identifier column; defaults to the first header field.
    """
    path = Path(path)
    try:
        schema = {name: ColumnKind(kind.value if isinstance(kind, Enum) else str(kind).lower())
                  for name, kind in schema.items()}
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        id_column = id_column or header[0]
        if id_column not in header:
            raise SchemaError(f"id column {id_column!r} not in header")
        for name in schema:
            if name not in header:
                raise SchemaError(f"schema column {name!r} not in header")
        id_pos = header.index(id_column)
        positions = {name: header.index(name) for name in schema}
        ids = []
        values = {name: [] for name in schema}
        seen = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            node = row[id_pos].strip()
            if not node:
                raise IntegrityError(f"line {line}: empty node_id")
            if node in seen:
                raise IntegrityError(
                    f"line {line}: duplicate node_id {node!r} (first seen on line {seen[node]})"
                )
            seen[node] = line
            ids.append(node)
            for name, pos in positions.items():
                cell = row[pos].strip()
                if cell == "":
                    values[name].append(np.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"column {name!r}: not a number: {cell!r}", line=line) from None
                if schema[name] is ColumnKind.BINARY and v not in (0.0, 1.0):
                    raise SchemaError(
                        f"line {line}, column {name!r}: binary column holds {cell!r}"
                    )
                values[name].append(v)
    return AttributeTable(tuple(ids), values, schema)


@dataclass(frozen=True)
class NominationList:
    """Directed friendship nominations for one survey period."""

    period: int
    edges: frozenset

    def __init__(self, period, edges):
        if period not in (1, 2):
            raise IntegrityError(f"period must be 1 or 2, got {period!r}")
        pairs = [(str(a), str(b)) for a, b in edges]
        for a, b in pairs:
            if a == b:
                raise IntegrityError(f"self-nomination by {a!r} in period {period}")
        unique = frozenset(pairs)
        if len(unique) != len(pairs):
            raise IntegrityError(f"duplicate ordered nomination in period {period}")
        object.__setattr__(self, "period", int(period))
        object.__setattr__(self, "edges", unique)


def load_nominations(path, delimiter=","):
    """Read ``period,nominator,nominee`` rows; returns ``{period: NominationList}``."""
    path = Path(path)
    edges = {1: [], 2: []}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = [h.strip().lower() for h in next(reader, [])]
        need = ("period", "nominator", "nominee")
        if any(h not in header for h in need):
            raise SchemaError(f"nominations header must contain {need}, got {header}")
        pos = [header.index(h) for h in need]
        seen = set()
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
            p, a, b = (row[k].strip() for k in pos)
            try:
                period = int(p)
            except ValueError:
                raise ParseError(f"bad period {p!r}", line=line) from None
            if period not in edges:
                raise ParseError(f"period must be 1 or 2, got {period}", line=line)
            if a == b:
                raise IntegrityError(f"line {line}: self-nomination by {a!r}")
            if (period, a, b) in seen:
                raise IntegrityError(f"line {line}: duplicate nomination {a!r}->{b!r}")
            seen.add((period, a, b))
            edges[period].append((a, b))
    return {p: NominationList(p, e) for p, e in edges.items()}


def _pair(a, b):
    return (a, b) if a < b else (b, a)


def reciprocal_links(nominations):
    """Unordered pairs ``(i, j)``, ``i < j``, in which both nodes named each other."""
    edges = nominations.edges
    return frozenset(_pair(a, b) for a, b in edges if (b, a) in edges)


@dataclass(frozen=True)
class VariableSpec:
    name: str
    source_column: str
    transform: Transform
    role: Role = Role.CANDIDATE

    def __post_init__(self):
        if not self.name:
            raise SpecError("variable name must be non-empty")
        object.__setattr__(self, "transform", _enum_value(Transform, self.transform, "transform"))
        object.__setattr__(self, "role", _enum_value(Role, self.role, "role"))


def load_specs(path, delimiter=","):
    """Read ``name,source_column,transform[,role]`` rows into VariableSpecs."""
    specs = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        for field_name in ("name", "source_column", "transform"):
            if field_name not in (reader.fieldnames or []):
                raise SchemaError(f"specs file lacks column {field_name!r}")
        for row in reader:
            specs.append(
                VariableSpec(
                    row["name"].strip(),
                    (row.get("source_column") or "").strip(),
                    row["transform"],
                    (row.get("role") or "candidate").strip() or "candidate",
                )
            )
    _check_unique(specs)
    return specs


def _check_unique(specs):
    names = [s.name for s in specs]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise SpecError(f"duplicate variable names: {sorted(dup)}")


class FilterKind(str, Enum):
    ALL = "all"
    EGO_GENDER = "ego-gender"
    EXCLUDE_NODES_WITH_PERIOD1_FRIENDS = "exclude-p1-nodes"
    EXCLUDE_PERIOD1_FRIEND_PAIRS = "exclude-p1-pairs"


@dataclass(frozen=True)
class DyadFilter:
    kind: FilterKind = FilterKind.ALL
    column: str = "female"
    value: float = 1.0

    @classmethod
    def parse(cls, token):
        """``all``, ``female``, ``male``, ``exclude-p1-nodes``, ``exclude-p1-pairs``,
        or ``ego:<column>=<value>``."""
        t = token.strip().lower()
        if t in ("all", ""):
            return cls(FilterKind.ALL)
        if t == "female":
            return cls(FilterKind.EGO_GENDER, "female", 1.0)
        if t == "male":
            return cls(FilterKind.EGO_GENDER, "female", 0.0)
        if t.startswith("ego:") and "=" in t:
            col, val = token.strip()[4:].split("=", 1)
            return cls(FilterKind.EGO_GENDER, col, float(val))
        try:
            return cls(FilterKind(t))
        except ValueError:
            raise SpecError(f"unknown filter {token!r}") from None

    def label(self):
        if self.kind is FilterKind.EGO_GENDER:
            return f"ego:{self.column}={self.value:g}"
        return self.kind.value


@dataclass(frozen=True)
class DyadTable:
    """One row per unordered pair ``i < j`` that survived filtering."""

    i: tuple
    j: tuple
    y: np.ndarray
    x: np.ndarray
    lagged: np.ndarray
    names: tuple
    roles: tuple = field(default=())

    def __post_init__(self):
        names = tuple(self.names)
        roles = tuple(Role(r) for r in self.roles) or (Role.CANDIDATE,) * len(names)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(len(self.i), len(names)))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "lagged", np.asarray(self.lagged, dtype=float))
        if len(roles) != len(names):
            raise SpecError("roles and names differ in length")

    def __len__(self):
        return len(self.i)

    @property
    def candidate_names(self):
        return tuple(n for n, r in zip(self.names, self.roles) if r is Role.CANDIDATE)

    @property
    def fixed_names(self):
        return tuple(n for n, r in zip(self.names, self.roles) if r is Role.ALWAYS)

    def column(self, name):
        return self.x[:, self.names.index(name)]

    def with_roles(self, roles):
        """Copy with roles from a mapping name -> Role (unlisted names stay candidates)."""
        roles = tuple(Role(roles.get(n, Role.CANDIDATE)) for n in self.names)
        return DyadTable(self.i, self.j, self.y, self.x, self.lagged, self.names, roles)


def _validate_specs(attrs, specs):
    _check_unique(specs)
    for s in specs:
        if s.transform is Transform.LAGGED:
            continue
        if s.source_column not in attrs.columns:
            raise SpecError(f"variable {s.name!r}: unknown column {s.source_column!r}")
        kind = attrs.kinds[s.source_column]
        if s.transform is Transform.ABS_DIFF and kind is not ColumnKind.NUMERIC:
            raise SpecError(f"variable {s.name!r}: absdiff needs a numeric column")
        if s.transform is Transform.SHARED_DUMMY and kind is not ColumnKind.BINARY:
            raise SpecError(f"variable {s.name!r}: shared dummy needs a binary column")


def _adjacency(pairs, index, n, what):
    a = np.zeros((n, n), dtype=bool)
    for p, q in pairs:
        try:
            u, v = index[p], index[q]
        except KeyError as exc:
            raise IntegrityError(f"{what} pair references unknown node {exc.args[0]!r}") from None
        a[u, v] = a[v, u] = True
    return a


def build_dyads(attrs, specs, response, lag=(), filters=()):
    """Assemble the pairwise regression design.

    Parameters
    ----------
    attrs : AttributeTable
    specs : sequence of VariableSpec
        Regressor definitions, in output column order.
    response : iterable of pairs
        Reciprocal period-2 links; ``y = 1`` for these pairs.
    lag : iterable of pairs
        Reciprocal period-1 links; fills ``lagged`` and any ``lagged`` regressor.
    filters : sequence of DyadFilter

    Returns
    -------
    DyadTable
        Rows are ordered by ``(i, j)`` under lexicographic node order.  A pair
        is dropped when either endpoint is Missing on any source column.
    """
    specs = list(specs)
    _validate_specs(attrs, specs)
    order = np.array(sorted(range(len(attrs)), key=lambda k: attrs.node_ids[k]), dtype=int)
    ids = [attrs.node_ids[k] for k in order]
    n = len(ids)
    index = {v: k for k, v in enumerate(ids)}
    cols = {name: values[order] for name, values in attrs.columns.items()}

    y_adj = _adjacency(response, index, n, "response")
    lag_adj = _adjacency(lag, index, n, "lag")
    iu, ju = np.triu_indices(n, 1)
    y = y_adj[iu, ju].astype(float)
    lagged = lag_adj[iu, ju].astype(float)

    keep = np.ones(iu.size, dtype=bool)
    for f in filters:
        if f.kind is FilterKind.ALL:
            continue
        if f.kind is FilterKind.EGO_GENDER:
            if f.column not in cols:
                raise SpecError(f"filter column {f.column!r} not in attributes")
            keep &= cols[f.column][iu] == f.value
        elif f.kind is FilterKind.EXCLUDE_NODES_WITH_PERIOD1_FRIENDS:
            has_friend = lag_adj.any(axis=1)
            keep &= ~(has_friend[iu] | has_friend[ju])
        elif f.kind is FilterKind.EXCLUDE_PERIOD1_FRIEND_PAIRS:
            keep &= lagged == 0
    after_filters = int(keep.sum())

    x = np.empty((iu.size, len(specs)))
    used = []
    for k, s in enumerate(specs):
        if s.transform is Transform.LAGGED:
            x[:, k] = lagged
            continue
        col = cols[s.source_column]
        a, b = col[iu], col[ju]
        if s.transform is Transform.ABS_DIFF:
            x[:, k] = np.abs(a - b)
        elif s.transform is Transform.SHARED_DUMMY:
            x[:, k] = (a == 1) & (b == 1)
        else:
            x[:, k] = a == b
        if s.source_column not in used:
            used.append(s.source_column)
    for name in used:
        miss = np.isnan(cols[name])
        drop = keep & (miss[iu] | miss[ju])
        if drop.any():
            logger.info("listwise deletion: %d pairs lack %r", int(drop.sum()), name)
        keep &= ~(miss[iu] | miss[ju])
    logger.info("dyads: %d pairs, %d after filters, %d after deletion",
                iu.size, after_filters, int(keep.sum()))
    if not keep.any():
        raise EmptyResultError("no dyads survive filtering and listwise deletion")

    sel = np.flatnonzero(keep)
    return DyadTable(
        i=tuple(ids[k] for k in iu[sel]),
        j=tuple(ids[k] for k in ju[sel]),
        y=y[sel],
        x=x[sel],
        lagged=lagged[sel],
        names=tuple(s.name for s in specs),
        roles=tuple(s.role for s in specs),
    )


@dataclass(frozen=True)
class ColumnSummary:
    n: int
    mean: float | None
    sd: float | None
    min: float | None
    max: float | None


def summarize(attrs):
    """Per-column N, mean, sample sd (divisor N-1), min and max over non-Missing cells.

    ``sd`` is ``None`` when fewer than two cells are present.
    """
    if len(attrs) == 0:
        raise EmptyResultError("cannot summarize an empty table")
    out = {}
    for name, col in attrs.columns.items():
        v = col[~np.isnan(col)]
        if v.size == 0:
            out[name] = ColumnSummary(0, None, None, None, None)
            continue
        sd = float(np.std(v, ddof=1)) if v.size >= 2 else None
        out[name] = ColumnSummary(int(v.size), float(v.mean()), sd, float(v.min()), float(v.max()))
    return out


def _fmt_exact(v):
    return repr(float(v))


def write_dyads(dyads, path):
    """Write a dyads file; floats use shortest round-trip repr so reads are bit-exact."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "y", "lagged", *dyads.names])
        for r in range(len(dyads)):
            w.writerow([
                dyads.i[r], dyads.j[r], int(dyads.y[r]), int(dyads.lagged[r]),
                *(_fmt_exact(v) for v in dyads.x[r]),
            ])


def read_dyads(path, roles=None):
    """Inverse of :func:`write_dyads`.  ``roles`` maps names to Role (default candidate)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["i", "j", "y", "lagged"]:
            raise SchemaError("dyads header must start with i,j,y,lagged")
        names = tuple(header[4:])
        ii, jj, y, lag, rows = [], [], [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
            try:
                ii.append(row[0])
                jj.append(row[1])
                y.append(float(row[2]))
                lag.append(float(row[3]))
                rows.append([float(c) for c in row[4:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=reader.line_num) from None
    if not ii:
        raise EmptyResultError(f"{path} holds no dyads")
    table = DyadTable(tuple(ii), tuple(jj), np.array(y), np.array(rows, dtype=float),
                      np.array(lag), names)
    if roles:
        table = table.with_roles(roles)
    return table


def specs_schema(specs):
    """Column-kind schema implied by a spec list (match columns are read as numeric
    unless another spec pins them binary)."""
    schema = {}
    for s in specs:
        if s.transform is Transform.LAGGED:
            continue
        if s.transform is Transform.SHARED_DUMMY:
            schema[s.source_column] = ColumnKind.BINARY
        else:
            schema.setdefault(s.source_column, ColumnKind.NUMERIC)
    return schema
