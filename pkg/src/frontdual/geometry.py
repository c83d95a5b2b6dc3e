"""Geometric objects attached to a parametrized map.

Everything here is built from jets of the map's components: the cofactor
normal map, the Hessian bundle (matrix, determinant, gradient, asymptotic
direction), the affine Gauss map, the dual front by maximal minors, the
degeneracy function of equidimensional maps and fronts together with
their null vector fields, and the standard chart projections between the
sphere, hyperbolic space and projective space.

Conventions: the normal pairs with a vector v as det(dF(e_1), ..,
dF(e_n), v) and the dual front pairs as det(dF(e_1), .., dF(e_n), F, v),
so both are read off signed maximal minors.  Null and asymptotic
directions come from the adjugate column of largest norm at the base
point, which extends them differentiably off the degeneracy locus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, JetError, jet_adjugate, jet_det
from .mapspec import MapSpec


class GeometryError(ValueError):
    pass


def _norm(values) -> float:
    return float(np.sqrt(sum(abs(np.asarray(v)) ** 2 for v in values)))


# -- jets of a map -----------------------------------------------------------


def component_jets(spec: MapSpec, point, order: int) -> list[Jet]:
    return spec.jets(point, order)


def jacobian_jets(comp_jets: list[Jet]) -> list[list[Jet]]:
    """Partial-derivative jets, indexed [component][variable]."""
    return [[c.partial(j) for j in range(c.nvars)] for c in comp_jets]


def jacobian_values(comp_jets: list[Jet]) -> np.ndarray:
    """Plain Jacobian matrix at the base point, shape (ncomps, nvars)."""
    return np.array([[g for g in c.gradient()] for c in comp_jets])


# -- normal map --------------------------------------------------------------


def cofactor_normal(comp_jets: list[Jet]) -> list[Jet]:
    """Normal covector of a hypersurface as signed maximal minors of the
    Jacobian; pairs with v as det(dF(e_1), ..., dF(e_n), v)."""
    m = len(comp_jets)
    n = comp_jets[0].nvars
    if m != n + 1:
        raise GeometryError(f"cofactor normal needs m = n+1 components, got m={m}, n={n}")
    partials = jacobian_jets(comp_jets)  # rows: component index, cols: variable
    out = []
    for i in range(m):
        rows = [partials[r] for r in range(m) if r != i]
        minor = jet_det([[rows[a][b] for b in range(n)] for a in range(n)])
        if (i + n) % 2:
            minor = -minor
        out.append(minor)
    return out


def factor_curve_normal(raw: list[Jet]) -> list[Jet]:
    """Divide a one-variable covector jet by its common leading power of the
    parameter, producing a nonvanishing normal through front singularities."""
    order = raw[0].order
    scale = max(float(np.max(np.abs(np.atleast_1d(j.scale())))) for j in raw)
    if scale == 0.0:
        return raw
    m = 0
    while m < order:
        if any(abs(j.coefficient((m,))) > 1e-12 * scale for j in raw):
            break
        m += 1
    if m == 0:
        return raw
    out = []
    for j in raw:
        coeffs = {}
        for idx, c in j.coeffs.items():
            if idx[0] >= m:
                coeffs[(idx[0] - m,)] = c
        out.append(Jet(1, order - m, coeffs))
    return out


def normal_map(spec: MapSpec, point, order: int) -> list[Jet]:
    """Normal covector jets along the map at ``point``.

    A user-supplied normal on the spec wins; otherwise the cofactor
    construction is used, which requires an immersion at the point (for
    planar curves a common parameter power is divided out automatically).
    """
    if spec.normal is not None:
        return spec.normal_jets(point, order)
    comp = component_jets(spec, point, order + 1)
    nu = cofactor_normal(comp)
    if spec.nvars == 1 and not nu[0].is_batched():
        nu = factor_curve_normal(nu)
        nu = [j.truncate(min(j.order, order)) for j in nu]
    if _norm([j.value() for j in nu]) == 0.0:
        raise GeometryError(
            "rank-deficient Jacobian: supply a normal field on the MapSpec"
        )
    return nu


# -- Hessian bundle ----------------------------------------------------------


@dataclass
class HessianJets:
    """Raw jet-level Hessian data; the scalar HessianData is read off it."""

    point: tuple
    nu: list[Jet]            # normal covector (affine) or dual-front covector (projective)
    hess: list[list[Jet]]    # n x n matrix of jets
    h: Jet                   # det(hess)
    comp: list[Jet]


def hessian_jets(spec: MapSpec, point, order: int = 6) -> HessianJets:
    """Hessian matrix h_ij = nu . F_{x^i x^j} and its determinant as jets.

    For projective-homogeneous maps the pairing covector is the dual front
    instead of the affine normal.
    """
    comp = component_jets(spec, point, order)
    n = spec.nvars
    if spec.kind == "projective-homogeneous":
        nu = dual_front_jets(comp)
    elif spec.kind in ("affine-hypersurface", "planar-curve"):
        if spec.normal is not None:
            nu = spec.normal_jets(point, order - 1)
        else:
            nu = cofactor_normal(comp)
            if n == 1 and not nu[0].is_batched():
                nu = factor_curve_normal(nu)
    else:
        raise GeometryError(f"no Hessian for kind {spec.kind!r}")
    depth = min(min(j.order for j in nu), order - 2)
    hess = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Jet.constant(0.0, n, depth)
            for a, c in enumerate(comp):
                acc = acc + nu[a].truncate(depth) * c.partial(i).partial(j).truncate(depth)
            row.append(acc)
        hess.append(row)
    h = jet_det(hess)
    return HessianJets(point=tuple(point), nu=nu, hess=hess, h=h, comp=comp)


@dataclass
class HessianData:
    """Per-point Hessian bundle of a hypersurface."""

    point: tuple
    nu: np.ndarray
    hess: np.ndarray
    h: float | complex
    grad_h: np.ndarray
    asymptotic: np.ndarray | None
    nondegenerate: bool


def asymptotic_field(hj: HessianJets, rank_tol: float = 1e-8) -> list[Jet] | None:
    """Kernel direction of the Hessian form as a differentiable jet field.

    Takes the adjugate column with the largest norm at the base point and
    normalizes it there; None when the Hessian drops rank by two or more.
    """
    n = len(hj.hess)
    adj = jet_adjugate(hj.hess)
    scale = max(float(np.max(np.abs(np.atleast_1d(e.scale())))) for row in hj.hess for e in row)
    norms = []
    for jcol in range(n):
        norms.append(_norm([adj[i][jcol].value() for i in range(n)]))
    jbest = int(np.argmax(norms))
    best = norms[jbest]
    if best <= rank_tol * max(scale, 1e-300) ** max(n - 1, 1):
        return None
    return [adj[i][jbest] * (1.0 / best) for i in range(n)]


def hessian_data(spec: MapSpec, point, order: int = 4, rank_tol: float = 1e-8) -> HessianData:
    hj = hessian_jets(spec, point, order)
    n = spec.nvars
    nu = np.array([j.value() for j in hj.nu])
    hess = np.array([[hj.hess[i][j].value() for j in range(n)] for i in range(n)])
    h = hj.h.value()
    grad_h = np.array(hj.h.gradient())
    hess_scale = max(
        float(np.max(np.abs(np.atleast_1d(e.scale())))) for row in hj.hess for e in row
    )
    asymptotic = None
    if n == 1:
        if abs(hess[0, 0]) <= rank_tol * max(hess_scale, 1e-300):
            asymptotic = np.array([1.0])
    else:
        sv = np.linalg.svd(hess, compute_uv=False)
        smax = float(sv[0])
        small = sv < rank_tol * max(smax, 1e-300)
        if int(np.sum(small)) == 1:
            field = asymptotic_field(hj, rank_tol)
            if field is not None:
                vec = np.array([f.value() for f in field])
                asymptotic = vec / np.linalg.norm(vec)
    nondeg = bool(np.linalg.norm(grad_h) > rank_tol * max(hess_scale, 1e-300))
    return HessianData(
        point=tuple(point),
        nu=nu,
        hess=hess,
        h=h,
        grad_h=grad_h,
        asymptotic=asymptotic,
        nondegenerate=nondeg,
    )


# -- projective points -------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousPoint:
    """Point of a projective space, normalized so the largest-modulus
    coordinate equals one (positive over the reals, ties to lowest index)."""

    coords: tuple

    @classmethod
    def of(cls, values) -> "HomogeneousPoint":
        vals = [complex(v) if np.iscomplexobj(np.asarray(v)) else float(np.real_if_close(v)) for v in values]
        mags = [abs(v) for v in vals]
        top = max(mags)
        if top == 0.0:
            raise GeometryError("cannot projectivize the zero vector")
        idx = mags.index(max(mags))
        pivot = vals[idx]
        return cls(tuple(v / pivot for v in vals))

    def distance(self, other: "HomogeneousPoint") -> float:
        return projective_distance(self.coords, other.coords)


def projective_distance(a, b) -> float:
    """Sine of the Fubini-Study angle between two projective points."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise GeometryError("zero vector has no projective class")
    c = abs(np.vdot(a, b)) / (na * nb)
    return float(np.sqrt(max(0.0, 1.0 - min(1.0, c) ** 2)))


def affine_gauss(spec: MapSpec, point, order: int = 3) -> HomogeneousPoint:
    """Projectivized normal: the affine Gauss map value at the point."""
    nu = normal_map(spec, point, order)
    vals = [j.value() for j in nu]
    if _norm(vals) == 0.0:
        raise GeometryError("normal vector vanishes; Gauss map undefined here")
    return HomogeneousPoint.of(vals)


# -- dual front --------------------------------------------------------------


def lift_jets(comp_jets: list[Jet]) -> list[Jet]:
    """Append the homogenizing coordinate 1 to affine component jets."""
    proto = comp_jets[0]
    return list(comp_jets) + [Jet.constant(1.0, proto.nvars, proto.order)]


def dual_front_jets(comp_jets: list[Jet]) -> list[Jet]:
    """Dual-front covector as the signed maximal minors of the matrix with
    columns dF(e_1), ..., dF(e_n), F; pairs with w as det(..., F, w)."""
    m = len(comp_jets)
    n = comp_jets[0].nvars
    if m != n + 2:
        raise GeometryError(f"dual front needs m = n+2 components, got m={m}, n={n}")
    depth = comp_jets[0].order - 1
    partials = jacobian_jets(comp_jets)
    cols = [[partials[r][v] for v in range(n)] + [comp_jets[r].truncate(depth)] for r in range(m)]
    out = []
    for i in range(m):
        rows = [cols[r] for r in range(m) if r != i]
        minor = jet_det(rows)
        if (i + n + 1) % 2:
            minor = -minor
        out.append(minor)
    return out


def dual_front(spec: MapSpec, point, order: int = 4) -> list[Jet]:
    """Dual front of a projective hypersurface (affine inputs are lifted)."""
    comp = component_jets(spec, point, order + 1)
    if spec.kind in ("affine-hypersurface", "planar-curve"):
        comp = lift_jets(comp)
    elif spec.kind != "projective-homogeneous":
        raise GeometryError(f"no dual front for kind {spec.kind!r}")
    return dual_front_jets(comp)


def incidence_check(F_jets: list[Jet], G_jets: list[Jet]) -> float:
    """Residual of the incidence relations: max of |G.F|, |G.dF(e_j)| and
    |dG(e_j).F| over the coordinate directions."""
    if len(F_jets) != len(G_jets):
        raise GeometryError("dual pairing needs equally many components")
    n = F_jets[0].nvars
    f = [j.value() for j in F_jets]
    g = [j.value() for j in G_jets]
    df = [[j.gradient()[v] for v in range(n)] for j in F_jets]
    dg = [[j.gradient()[v] for v in range(n)] for j in G_jets]
    worst = abs(sum(a * b for a, b in zip(f, g)))
    for v in range(n):
        worst = max(worst, abs(sum(g[i] * df[i][v] for i in range(len(f)))))
        worst = max(worst, abs(sum(f[i] * dg[i][v] for i in range(len(f)))))
    return float(worst)


# -- degeneracy function and null fields --------------------------------------


@dataclass
class FrontFrame:
    """Degeneracy data of a map at a point: the determinant function as a
    jet, whether the point is singular, and the null direction field."""

    point: tuple
    which: str  # "map" | "front"
    lam: Jet
    singular: bool
    eta: list[Jet] | None
    tol: float


def _null_field_from_square(matrix: list[list[Jet]], ncomps: int) -> list[Jet] | None:
    k = len(matrix)
    adj = jet_adjugate(matrix)
    norms = [_norm([adj[i][j].value() for i in range(k)]) for j in range(k)]
    jbest = int(np.argmax(norms))
    if norms[jbest] == 0.0:
        return None
    col = [adj[i][jbest] for i in range(ncomps)]
    base = _norm([c.value() for c in col])
    if base == 0.0:
        return None
    return [c * (1.0 / base) for c in col]


def lambda_map(spec: MapSpec, point, order: int = 6, tol: float = 1e-9) -> FrontFrame:
    """Degeneracy frame of an equidimensional map: lam = det(Jacobian)."""
    comp = component_jets(spec, point, order)
    n = spec.nvars
    if len(comp) != n:
        raise GeometryError("lambda_map needs an equidimensional map")
    partials = jacobian_jets(comp)
    matrix = [[partials[i][j] for j in range(n)] for i in range(n)]
    lam = jet_det(matrix)
    scale = float(np.max(np.abs(np.atleast_1d(lam.scale()))))
    singular = abs(lam.value()) <= tol * max(scale, 1e-300)
    eta = _null_field_from_square(matrix, n) if singular else None
    return FrontFrame(tuple(point), "map", lam, bool(singular), eta, tol)


def lambda_front(spec: MapSpec, nu: list[Jet] | None, point, order: int = 6, tol: float = 1e-9) -> FrontFrame:
    """Degeneracy frame of a front: lam = det(dF(e_1), .., dF(e_n), nu)."""
    comp = component_jets(spec, point, order)
    n = spec.nvars
    if len(comp) != n + 1:
        raise GeometryError("lambda_front needs m = n+1 components")
    if nu is None:
        nu = normal_map(spec, point, order - 1)
    if _norm([j.value() for j in nu]) == 0.0:
        raise GeometryError("normal field vanishes at the point")
    partials = jacobian_jets(comp)
    depth = min(min(j.order for j in nu), order - 1)
    matrix = [
        [partials[i][j].truncate(depth) for j in range(n)] + [nu[i].truncate(depth)]
        for i in range(n + 1)
    ]
    lam = jet_det(matrix)
    scale = float(np.max(np.abs(np.atleast_1d(lam.scale()))))
    singular = abs(lam.value()) <= tol * max(scale, 1e-300)
    eta = _null_field_from_square(matrix, n) if singular else None
    return FrontFrame(tuple(point), "front", lam, bool(singular), eta, tol)


def front_frame_from_jets(comp: list[Jet], nu: list[Jet], point, tol: float = 1e-9) -> FrontFrame:
    """lambda_front on precomputed jets (used for chart-reduced dual fronts)."""
    n = comp[0].nvars
    partials = jacobian_jets(comp)
    depth = min(min(j.order for j in nu), comp[0].order - 1)
    matrix = [
        [partials[i][j].truncate(depth) for j in range(n)] + [nu[i].truncate(depth)]
        for i in range(n + 1)
    ]
    lam = jet_det(matrix)
    scale = float(np.max(np.abs(np.atleast_1d(lam.scale()))))
    singular = abs(lam.value()) <= tol * max(scale, 1e-300)
    eta = _null_field_from_square(matrix, n) if singular else None
    return FrontFrame(tuple(point), "front", lam, bool(singular), eta, tol)


def map_frame_from_jets(comp: list[Jet], point, tol: float = 1e-9) -> FrontFrame:
    n = comp[0].nvars
    partials = jacobian_jets(comp)
    matrix = [[partials[i][j] for j in range(n)] for i in range(n)]
    lam = jet_det(matrix)
    scale = float(np.max(np.abs(np.atleast_1d(lam.scale()))))
    singular = abs(lam.value()) <= tol * max(scale, 1e-300)
    eta = _null_field_from_square(matrix, n) if singular else None
    return FrontFrame(tuple(point), "map", lam, bool(singular), eta, tol)


# -- model-space chart projections --------------------------------------------


def chart_projection(which: str, point) -> tuple:
    """Canonical projections between model spaces.

    ``"S3-to-P3"``: class of a unit vector in projective space.
    ``"H3-to-S3plus"``: Euclidean normalization of a hyperboloid point into
    the open upper hemisphere.
    """
    p = np.asarray(point, dtype=float)
    if p.shape != (4,):
        raise GeometryError("model-space points live in R^4")
    if which == "S3-to-P3":
        if abs(np.linalg.norm(p) - 1.0) > 1e-9:
            raise GeometryError("point is not on the unit sphere")
        return HomogeneousPoint.of(p).coords
    if which == "H3-to-S3plus":
        lorentz = -p[0] ** 2 + float(np.sum(p[1:] ** 2))
        if abs(lorentz + 1.0) > 1e-9 or p[0] <= 0:
            raise GeometryError("point is not on the upper hyperboloid")
        q = p / np.linalg.norm(p)
        return tuple(float(x) for x in q)
    raise GeometryError(f"unknown chart projection {which!r}")
