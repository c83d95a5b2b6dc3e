"""Parametrized map definitions and their plain-text file format.

A MapSpec bundles everything needed to evaluate a parametric map as jets:
variable names, one expression per component, a domain box with optional
periodic identifications, the scalar field (real or complex) and a kind
tag fixing the dimension pattern.  An optional normal field (one
expression per ambient coordinate) supports fronts whose Jacobian
degenerates on the singular set.

File format: one ``key value...`` pair per line.  Keys are ``name``,
``field``, ``kind``, ``vars``, ``domain`` (one line per variable:
``domain <var> <lo> <hi> [periodic]``), ``component`` and optionally
``normal`` (one expression each, in order).  ``#`` starts a comment.
Domain bounds may be constant expressions such as ``-pi``.  The formatter
emits a canonical document that reparses to an equal MapSpec and
round-trips byte-identically through the formatter.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import expr as ex
from .jets import Jet

KINDS = ("affine-hypersurface", "projective-homogeneous", "planar-curve", "plane-map")


class MapSpecError(ValueError):
    pass


@dataclass(frozen=True)
class DomainInterval:
    lo: float
    hi: float
    periodic: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.lo >= self.hi:
            raise MapSpecError(f"invalid domain interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class MapSpec:
    name: str
    field: str  # "real" | "complex"
    kind: str
    variables: tuple[str, ...]
    components: tuple[ex.Node, ...]
    domain: tuple[DomainInterval, ...]
    normal: tuple[ex.Node, ...] | None = None

    def __post_init__(self):
        n, m = self.nvars, self.ncomps
        if self.field not in ("real", "complex"):
            raise MapSpecError(f"field must be real or complex, got {self.field!r}")
        if self.kind not in KINDS:
            raise MapSpecError(f"unknown kind {self.kind!r}")
        if len(self.domain) != n:
            raise MapSpecError("need one domain interval per variable")
        expected = {
            "affine-hypersurface": n + 1,
            "projective-homogeneous": n + 2,
            "planar-curve": 2,
            "plane-map": n,
        }[self.kind]
        if self.kind == "planar-curve" and n != 1:
            raise MapSpecError("planar-curve kind requires exactly one variable")
        if m != expected:
            raise MapSpecError(
                f"kind {self.kind} with {n} variables needs {expected} components, got {m}"
            )
        if self.normal is not None and len(self.normal) != m:
            raise MapSpecError("normal field needs one expression per ambient coordinate")
        names = set()
        for comp in self.components + (self.normal or ()):
            names |= ex.free_variables(comp)
        undeclared = names - set(self.variables)
        if undeclared:
            raise MapSpecError(f"undeclared variables in expressions: {sorted(undeclared)}")

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def ncomps(self) -> int:
        return len(self.components)

    # -- evaluation ----------------------------------------------------------

    def jets(self, point, order: int) -> list[Jet]:
        """Component jets at ``point`` (scalars or same-shape arrays)."""
        if len(point) != self.nvars:
            raise MapSpecError(f"point needs {self.nvars} coordinates, got {len(point)}")
        return [ex.eval_jet(c, point, order, self.field) for c in self.components]

    def normal_jets(self, point, order: int) -> list[Jet] | None:
        if self.normal is None:
            return None
        return [ex.eval_jet(c, point, order, self.field) for c in self.normal]

    def values(self, point):
        """Plain component values, vectorized over array-valued points."""
        return [ex.eval_scalar(c, point, self.field) for c in self.components]

    def contains(self, point) -> bool:
        for x, iv in zip(point, self.domain):
            if np.iscomplexobj(np.asarray(x)):
                return True  # complex evaluation is unconstrained
            if not (iv.lo - 1e-12 <= float(np.real(x)) <= iv.hi + 1e-12):
                return False
        return True

    def wrap(self, point):
        """Map a point into the fundamental domain of periodic variables."""
        out = []
        for x, iv in zip(point, self.domain):
            if iv.periodic:
                width = iv.hi - iv.lo
                out.append(iv.lo + np.mod(x - iv.lo, width))
            else:
                out.append(x)
        return out


# -- text format -------------------------------------------------------------


def parse_mapspec(text: str) -> MapSpec:
    name = None
    fieldname = None
    kind = None
    variables: tuple[str, ...] | None = None
    domain: dict[str, DomainInterval] = {}
    components: list[str] = []
    normals: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "name":
            name = rest
        elif key == "field":
            fieldname = rest
        elif key == "kind":
            kind = rest
        elif key == "vars":
            variables = tuple(rest.split())
        elif key == "domain":
            parts = rest.split()
            if variables is None:
                raise MapSpecError(f"line {lineno}: domain before vars")
            periodic = False
            if parts and parts[-1] == "periodic":
                periodic = True
                parts = parts[:-1]
            if len(parts) != 3:
                raise MapSpecError(f"line {lineno}: domain needs 'var lo hi [periodic]'")
            var, lo_s, hi_s = parts
            try:
                lo = float(ex.eval_scalar(ex.parse(lo_s, ()), ()))
                hi = float(ex.eval_scalar(ex.parse(hi_s, ()), ()))
            except ex.ExprError as e:
                raise MapSpecError(f"line {lineno}: bad domain bound: {e}") from e
            domain[var] = DomainInterval(lo, hi, periodic)
        elif key == "component":
            components.append(rest)
        elif key == "normal":
            normals.append(rest)
        else:
            raise MapSpecError(f"line {lineno}: unknown key {key!r}")

    if name is None or fieldname is None or kind is None or variables is None:
        raise MapSpecError("missing one of the required keys: name, field, kind, vars")
    if not components:
        raise MapSpecError("no components given")
    missing = [v for v in variables if v not in domain]
    if missing:
        raise MapSpecError(f"missing domain for variables: {missing}")

    comp_asts = tuple(ex.parse(src, variables) for src in components)
    normal_asts = tuple(ex.parse(src, variables) for src in normals) if normals else None
    return MapSpec(
        name=name,
        field=fieldname,
        kind=kind,
        variables=variables,
        components=comp_asts,
        domain=tuple(domain[v] for v in variables),
        normal=normal_asts,
    )


def format_mapspec(spec: MapSpec) -> str:
    lines = [
        f"name {spec.name}",
        f"field {spec.field}",
        f"kind {spec.kind}",
        "vars " + " ".join(spec.variables),
    ]
    for var, iv in zip(spec.variables, spec.domain):
        suffix = " periodic" if iv.periodic else ""
        lines.append(f"domain {var} {iv.lo!r} {iv.hi!r}{suffix}")
    for comp in spec.components:
        lines.append(f"component {ex.pretty(comp)}")
    if spec.normal is not None:
        for comp in spec.normal:
            lines.append(f"normal {ex.pretty(comp)}")
    return "\n".join(lines) + "\n"


def load_mapspec(path) -> MapSpec:
    with open(path, "r", encoding="utf-8") as f:
        return parse_mapspec(f.read())


def save_mapspec(spec: MapSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_mapspec(spec))


def mapspec_from_strings(
    name: str,
    kind: str,
    variables,
    components,
    domain,
    field: str = "real",
    normal=None,
) -> MapSpec:
    """Convenience constructor from expression strings.

    ``domain`` is a sequence of (lo, hi) or (lo, hi, periodic) per variable.
    """
    variables = tuple(variables)
    ivs = []
    for d in domain:
        lo, hi = d[0], d[1]
        periodic = bool(d[2]) if len(d) > 2 else False
        ivs.append(DomainInterval(float(lo), float(hi), periodic))
    return MapSpec(
        name=name,
        field=field,
        kind=kind,
        variables=variables,
        components=tuple(ex.parse(c, variables) for c in components),
        domain=tuple(ivs),
        normal=tuple(ex.parse(c, variables) for c in normal) if normal else None,
    )
