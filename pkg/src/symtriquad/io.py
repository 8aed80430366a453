"""Rule documents, sequence descriptors and config files.

Rules are stored as JSON with every number written as a decimal string, so
64-digit rules survive a round trip.  Keys are sorted and the layout is
fixed, which makes repeated runs byte-identical.

A sequence descriptor is either a built-in reference::

    {"builtin": "2d", "nu_max": 7}
    {"builtin": "poly2d", "degree": 6}
    {"builtin": "1d", "n_prime": 3}

or an explicit list of groups of basis-function descriptors::

    {"dim": 2, "groups": [[{"type": "monomial2d", "p": 0, "q": 0}], ...]}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import mpmath as mp

from .functions import (
    FunctionGroup,
    GroupSequence,
    basis_from_descriptor,
    build_group_sequence_2d,
    build_sequence_1d,
    flatten,
    group_sequence_from_functions,
    polynomial_group_sequence_2d,
)
from .geometry import Orbit, PhysicalRule, SymmetricRule, expand_rule
from .linerule import Rule1D

__all__ = [
    "SCHEMA_VERSION",
    "RuleDocument",
    "decimal",
    "document_from_symmetric",
    "document_from_physical",
    "document_from_line",
    "serialize_rule",
    "parse_rule",
    "read_rule",
    "write_rule",
    "sequence_from_descriptor",
    "load_config",
]

SCHEMA_VERSION = 1


def decimal(x, digits: int = 64) -> str:
    """Decimal string of ``x`` carrying ``digits`` significant digits plus guard."""
    with mp.workdps(digits + 4):
        return mp.nstr(mp.mpf(x), digits + 4, strip_zeros=True, min_fixed=-6, max_fixed=3)


@dataclass
class RuleDocument:
    """In-memory form of a rule file; numbers are kept as decimal strings."""

    approach: str
    n: int
    precision_digits: int = 64
    kind: str = "triangle"
    counts: list | None = None
    orbits: list | None = None
    points: list | None = None
    weights: list | None = None
    sequence: dict | None = None
    residual_max: str | None = None
    meta: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "approach": self.approach,
            "kind": self.kind,
            "n": self.n,
            "precision_digits": self.precision_digits,
            "residual_max": self.residual_max,
            "sequence": self.sequence,
            "meta": self.meta,
        }
        if self.counts is not None:
            d["counts"] = " ".join(str(c) for c in self.counts)
            d["orbits"] = self.orbits
        if self.points is not None:
            d["points"] = self.points
            d["weights"] = self.weights
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RuleDocument":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        counts = d.get("counts")
        if isinstance(counts, str):
            counts = [int(c) for c in counts.split()]
        doc = cls(
            approach=d["approach"],
            n=int(d["n"]),
            precision_digits=int(d.get("precision_digits", 64)),
            kind=d.get("kind", "triangle"),
            counts=counts,
            orbits=d.get("orbits"),
            points=d.get("points"),
            weights=d.get("weights"),
            sequence=d.get("sequence"),
            residual_max=d.get("residual_max"),
            meta=d.get("meta") or {},
        )
        doc.check()
        return doc

    def check(self) -> None:
        if self.points is not None and len(self.points) != len(self.weights or []):
            raise ValueError("points and weights differ in length")
        if self.orbits is not None and self.points is not None:
            expanded = self.symmetric_rule().n_points
            if expanded != len(self.points):
                raise ValueError(f"orbit block expands to {expanded} points, expanded block has {len(self.points)}")

    # conversions -----------------------------------------------------------
    def symmetric_rule(self) -> SymmetricRule:
        if self.orbits is None:
            raise ValueError("document has no orbit block")
        with mp.workdps(self.precision_digits + 4):
            orbits = []
            for o in self.orbits:
                orbits.append(
                    Orbit(
                        int(o["type"]),
                        mp.mpf(o["weight"]),
                        None if o.get("alpha") is None else mp.mpf(o["alpha"]),
                        None if o.get("beta") is None else mp.mpf(o["beta"]),
                    )
                )
        return SymmetricRule(tuple(orbits), self.precision_digits)

    def physical_rule(self) -> PhysicalRule:
        if self.points is None:
            raise ValueError("document has no expanded points")
        with mp.workdps(self.precision_digits + 4):
            pts = tuple(tuple(mp.mpf(c) for c in p) for p in self.points)
            wts = tuple(mp.mpf(w) for w in self.weights)
        return PhysicalRule(pts, wts, {"approach": self.approach, "n": self.n, **self.meta})

    def line_rule(self) -> Rule1D:
        if self.kind != "line":
            raise ValueError("document does not hold a 1-D rule")
        with mp.workdps(self.precision_digits + 4):
            nodes = tuple(mp.mpf(p[0]) for p in self.points)
            wts = tuple(mp.mpf(w) for w in self.weights)
            res = mp.mpf(self.residual_max) if self.residual_max is not None else mp.mpf(0)
        seq = tuple(flatten(sequence_from_descriptor(self.sequence))) if self.sequence else ()
        return Rule1D(nodes, wts, seq, res, self.precision_digits, dict(self.meta))


def _orbit_entries(rule: SymmetricRule, digits: int) -> list:
    out = []
    for o in rule.orbits:
        out.append(
            {
                "type": int(o.kind),
                "alpha": None if o.alpha is None else decimal(o.alpha, digits),
                "beta": None if o.beta is None else decimal(o.beta, digits),
                "weight": decimal(o.weight, digits),
            }
        )
    return out


def document_from_symmetric(
    rule: SymmetricRule, approach: str, sequence: dict | None = None, residual_max=None, meta: dict | None = None
) -> RuleDocument:
    """Orbit block plus the expanded reference-triangle points ``(x, y) = (a, b)``."""
    digits = rule.precision_digits
    with mp.workdps(digits):
        pts = [[decimal(p.a, digits), decimal(p.b, digits)] for p, _ in expand_rule(rule)]
        wts = [decimal(w, digits) for _, w in expand_rule(rule)]
    return RuleDocument(
        approach=approach,
        n=rule.n_points,
        precision_digits=digits,
        counts=list(rule.counts),
        orbits=_orbit_entries(rule, digits),
        points=pts,
        weights=wts,
        sequence=sequence,
        residual_max=None if residual_max is None else decimal(residual_max, 6),
        meta=dict(meta or {}),
    )


def document_from_physical(
    rule: PhysicalRule, approach: str, digits: int = 64, sequence=None, residual_max=None, meta=None, kind="triangle"
) -> RuleDocument:
    pts = [[decimal(c, digits) for c in p] for p in rule.points]
    return RuleDocument(
        approach=approach,
        n=len(rule),
        precision_digits=digits,
        kind=kind,
        points=pts,
        weights=[decimal(w, digits) for w in rule.weights],
        sequence=sequence,
        residual_max=None if residual_max is None else decimal(residual_max, 6),
        meta=dict(meta or {}),
    )


def document_from_line(rule: Rule1D, sequence: dict | None = None, meta=None) -> RuleDocument:
    digits = rule.precision_digits
    return RuleDocument(
        approach="approach2",
        n=rule.n,
        precision_digits=digits,
        kind="line",
        points=[[decimal(x, digits)] for x in rule.nodes],
        weights=[decimal(w, digits) for w in rule.weights],
        sequence=sequence or {"builtin": "1d", "n_prime": rule.n},
        residual_max=decimal(rule.residual_max, 6),
        meta={**rule.meta, **(meta or {})},
    )


def serialize_rule(doc: RuleDocument) -> str:
    return json.dumps(doc.to_dict(), sort_keys=True, indent=1) + "\n"


def parse_rule(text: str) -> RuleDocument:
    return RuleDocument.from_dict(json.loads(text))


def write_rule(path, doc: RuleDocument) -> None:
    Path(path).write_text(serialize_rule(doc))


def read_rule(path) -> RuleDocument:
    return parse_rule(Path(path).read_text())


def sequence_from_descriptor(desc: dict):
    """A GroupSequence (2-D) or list of functions (1-D) from a descriptor."""
    if "builtin" in desc:
        kind = desc["builtin"]
        if kind == "2d":
            return build_group_sequence_2d(int(desc["nu_max"]), extrapolate=bool(desc.get("extrapolate", False)))
        if kind == "poly2d":
            return polynomial_group_sequence_2d(int(desc["degree"]))
        if kind == "1d":
            return build_sequence_1d(int(desc["n_prime"]))
        raise ValueError(f"unknown built-in sequence {kind!r}")
    dim = int(desc.get("dim", 2))
    if "groups" in desc:
        groups, ms, deg = [], 0, 0
        for i, members in enumerate(desc["groups"]):
            funcs = tuple(basis_from_descriptor(m) for m in members)
            for f in funcs:
                ms += f.is_singular
                deg = max(deg, getattr(f, "degree", 0) if not f.is_singular else 0)
            groups.append(FunctionGroup(i, funcs, deg, ms))
        seq = GroupSequence(tuple(groups), dim)
    elif "functions" in desc:
        seq = group_sequence_from_functions([basis_from_descriptor(m) for m in desc["functions"]], dim)
    else:
        raise ValueError("sequence descriptor needs 'builtin', 'groups' or 'functions'")
    return seq if dim == 2 else seq.functions()


def load_config(path) -> dict:
    """Read a JSON config: ``{"solver": {...}, "sequence": {...}, ...}``."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data
