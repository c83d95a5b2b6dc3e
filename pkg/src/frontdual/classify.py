"""Contact chains and singularity verdicts.

The engine is the iterated directional derivative of an admissible
function phi along an extended vector field: phi' = d phi (eta), phi'' =
d phi'(eta), ...  A point is diagnosed by the first chain value that does
not vanish, together with the rank of the Jacobian of the preceding
chain entries.  The same chain decides three families of verdicts:

* inflection points of hypersurfaces (phi = Hessian determinant, field =
  asymptotic direction): chain index k with full rank gives an
  A_{k+1}-inflection point;
* singular points of fronts (phi = degeneracy determinant with the
  normal appended, field = null direction): chain index k gives an
  A_{k+1} front singularity (cuspidal edge for k=1, swallowtail for k=2);
* singular points of equidimensional maps (phi = Jacobian determinant):
  chain index k gives an A_k Morin singularity (fold, cusp, ...).

For k = 1 no rank condition beyond admissibility applies: every vector
field counts as 1-nondegenerate.  All verdicts carry their chain as an
auditable certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .jets import Jet, directional_derivative
from . import geometry as geo
from .geometry import GeometryError, HessianJets
from .mapspec import MapSpec


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Zero/rank thresholds used by every verdict; all relative."""

    zero: float = 1e-7       # chain value counts as zero below zero * jet scale
    rank: float = 1e-8       # singular value counts as zero below rank * sigma_max
    singular: float = 1e-9   # degeneracy-locus membership, relative to jet scale


DEFAULT_TOL = Tolerances()


@dataclass
class ContactChain:
    """Certificate of an iterated-contact computation at one point."""

    point: tuple
    function_tag: str
    values: list
    scales: list
    k: int | None
    jacobian: np.ndarray | None
    rank: int | None
    singular_values: np.ndarray | None
    admissible: bool
    truncated: bool
    tol: Tolerances

    def describe(self) -> dict:
        return {
            "point": list(self.point),
            "function": self.function_tag,
            "chain_values": [complex(v) if np.iscomplexobj(np.asarray(v)) else float(v) for v in self.values],
            "k": self.k,
            "rank": self.rank,
            "admissible": self.admissible,
            "truncated": self.truncated,
            "tol_zero": self.tol.zero,
            "tol_rank": self.tol.rank,
        }


@dataclass
class SingularityClass:
    """A verdict plus the chain certificate behind it."""

    verdict: str
    family: str  # inflection | front | morin | regular | degenerate
    k: int | None
    chain: ContactChain | None
    dual: "SingularityClass | None" = None

    @property
    def diagnosable(self) -> bool:
        return self.family not in ("degenerate",)

    def describe(self) -> dict:
        out = {"verdict": self.verdict, "family": self.family, "k": self.k}
        if self.chain is not None:
            out["certificate"] = self.chain.describe()
        if self.dual is not None:
            out["dual"] = self.dual.describe()
        return out


def _jet_scale(j: Jet) -> float:
    s = j.scale()
    return float(np.max(np.abs(np.atleast_1d(s)))) if not isinstance(s, float) else s


def extend_field(field, nvars: int, order: int) -> list[Jet]:
    """Extension of a vector field given along a hypersurface to jets on a
    neighborhood.

    Plain number entries become constant-coefficient jets (the canonical
    extension in the working chart); entries that are already jets are
    returned as their own extension.
    """
    out = []
    for entry in field:
        if isinstance(entry, Jet):
            out.append(entry)
        else:
            out.append(Jet.constant(entry, nvars, order))
    return out


def contact_chain(
    phi: Jet,
    field: list[Jet],
    point,
    max_k: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
    function_tag: str = "phi",
) -> ContactChain:
    """Iterated derivatives of phi along the field, the first-nonzero index
    k and the rank of the Jacobian of (phi, phi', ..., phi^(k-1))."""
    nvars = phi.nvars
    if max_k is None:
        max_k = phi.order - 1
    max_k = min(max_k, phi.order - 1)
    if max_k < 1:
        raise ClassifyError("jet order too low for a contact chain")

    chain_jets = [phi]
    for _ in range(max_k):
        chain_jets.append(directional_derivative(chain_jets[-1], field))

    values = [j.value() for j in chain_jets]
    scales = [max(_jet_scale(j), 1e-300) for j in chain_jets]

    grad0 = np.array(phi.gradient())
    admissible = bool(np.linalg.norm(grad0) > tol.zero * scales[0])

    k = None
    for j, (v, s) in enumerate(zip(values, scales)):
        if abs(v) > tol.zero * s:
            k = j
            break
    truncated = k is None

    jac = None
    rank = None
    sv = None
    if k is not None and k >= 1:
        rows = []
        for j in range(k):
            g = np.array(chain_jets[j].gradient()) / scales[j]
            rows.append(g)
        jac = np.array(rows)
        sv = np.linalg.svd(jac, compute_uv=False)
        smax = float(sv[0]) if sv.size else 0.0
        rank = int(np.sum(sv > tol.rank * max(smax, 1e-300)))
    return ContactChain(
        point=tuple(point),
        function_tag=function_tag,
        values=values,
        scales=scales,
        k=k,
        jacobian=jac,
        rank=rank,
        singular_values=sv,
        admissible=admissible,
        truncated=truncated,
        tol=tol,
    )


def _verdict_from_chain(chain: ContactChain, family: str) -> SingularityClass:
    if not chain.admissible:
        return SingularityClass("DegenerateNondiagnosable", "degenerate", None, chain)
    if chain.truncated:
        return SingularityClass("DegenerateNondiagnosable", "degenerate", None, chain)
    k = chain.k
    if k == 0:
        label = "Regular" if family != "morin" else "Regular"
        return SingularityClass(label, "regular", 0, chain)
    if chain.rank != k:
        return SingularityClass("DegenerateNondiagnosable", "degenerate", None, chain)
    if family == "inflection":
        return SingularityClass(f"A{k + 1}-inflection", "inflection", k, chain)
    if family == "front":
        return SingularityClass(f"A{k + 1}-front-singularity", "front", k, chain)
    if family == "morin":
        return SingularityClass(f"A{k}-Morin", "morin", k, chain)
    raise ClassifyError(f"unknown verdict family {family!r}")


# -- inflection points ---------------------------------------------------------


def classify_inflection_jets(
    hj: HessianJets, point, tol: Tolerances = DEFAULT_TOL, max_k: int | None = None
) -> SingularityClass:
    h = hj.h
    scale = max(_jet_scale(h), 1e-300)
    if abs(h.value()) > tol.zero * scale:
        return SingularityClass("Regular", "regular", 0, None)
    field = geo.asymptotic_field(hj, tol.rank)
    if field is None:
        chain = ContactChain(tuple(point), "hessian-h", [h.value()], [scale], None,
                             None, None, None, False, False, tol)
        return SingularityClass("DegenerateNondiagnosable", "degenerate", None, chain)
    n = h.nvars
    cap = min(n, h.order - 1) if max_k is None else max_k
    chain = contact_chain(h, field, point, max_k=cap, tol=tol, function_tag="hessian-h")
    return _verdict_from_chain(chain, "inflection")


def classify_inflection(
    spec: MapSpec, point, order: int = 6, tol: Tolerances = DEFAULT_TOL
) -> SingularityClass:
    """Inflection verdict of a hypersurface point: Regular, an
    A_{k+1}-inflection point, or degenerate-nondiagnosable."""
    hj = geo.hessian_jets(spec, point, order)
    return classify_inflection_jets(hj, point, tol)


# -- front singularities -------------------------------------------------------


def classify_front_from_frame(frame: geo.FrontFrame, tol: Tolerances = DEFAULT_TOL) -> SingularityClass:
    if not frame.singular:
        return SingularityClass("Regular", "regular", 0, None)
    if frame.eta is None:
        chain = ContactChain(frame.point, "lambda-front", [frame.lam.value()],
                             [max(_jet_scale(frame.lam), 1e-300)], None, None, None,
                             None, False, False, tol)
        return SingularityClass("DegenerateNondiagnosable", "degenerate", None, chain)
    tag = "lambda-front" if frame.which == "front" else "lambda-map"
    chain = contact_chain(frame.lam, frame.eta, frame.point, tol=tol, function_tag=tag)
    family = "front" if frame.which == "front" else "morin"
    return _verdict_from_chain(chain, family)


def classify_front_singularity(
    spec: MapSpec,
    point,
    nu: list[Jet] | None = None,
    order: int = 6,
    tol: Tolerances = DEFAULT_TOL,
) -> SingularityClass:
    """Front-singularity verdict at a point of a hypersurface map:
    Regular, A_{k+1}-front-singularity (cuspidal edge, swallowtail, ...)
    or degenerate."""
    frame = geo.lambda_front(spec, nu, point, order, tol.singular)
    return classify_front_from_frame(frame, tol)


def classify_morin(
    spec: MapSpec, point, order: int = 6, tol: Tolerances = DEFAULT_TOL
) -> SingularityClass:
    """Morin verdict of an equidimensional map: Regular, A_k-Morin
    (fold, cusp, ...) or degenerate."""
    frame = geo.lambda_map(spec, point, order, tol.singular)
    return classify_front_from_frame(frame, tol)


# -- duality ------------------------------------------------------------------


def gauss_chart_jets(nu: list[Jet], tol: Tolerances = DEFAULT_TOL) -> list[Jet]:
    """Affine chart of the projectivized normal: divide by the component of
    largest modulus at the base point and drop it."""
    vals = [abs(np.asarray(j.value())) for j in nu]
    ell = int(np.argmax([float(np.max(np.atleast_1d(v))) for v in vals]))
    pivot = nu[ell]
    return [nu[i] / pivot for i in range(len(nu)) if i != ell]


def dual_chart_front(comp: list[Jet], G: list[Jet]):
    """Chart-reduce a dual front [G] to an affine front together with the
    normal induced by the source map's position vector.

    Returns (chart jets, normal jets).  The chart index maximizes |G_l|
    subject to the induced normal not vanishing.
    """
    m = len(G)
    gvals = [abs(G[i].value()) for i in range(m)]
    order_pref = sorted(range(m), key=lambda i: -gvals[i])
    for ell in order_pref:
        if gvals[ell] == 0.0:
            continue
        normal = [comp[i] for i in range(m) if i != ell]
        if geo._norm([j.value() for j in normal]) > 1e-12:
            chart = [G[i] / G[ell] for i in range(m) if i != ell]
            depth = min(j.order for j in chart)
            normal = [j.truncate(min(j.order, depth)) for j in normal]
            return chart, normal
    raise GeometryError("no usable chart for the dual front at this point")


@dataclass
class DualityReport:
    primal: SingularityClass
    dual: SingularityClass
    agree: bool

    def describe(self) -> dict:
        return {
            "primal": self.primal.describe(),
            "dual": self.dual.describe(),
            "agree": self.agree,
        }


def duality_check(
    spec: MapSpec, point, order: int = 6, tol: Tolerances = DEFAULT_TOL
) -> DualityReport:
    """Classify a point on both sides of the duality and compare chain depths.

    Affine hypersurfaces pair inflection verdicts with Morin verdicts of
    the Gauss map (A_{k+1}-inflection vs A_k-Morin); projective
    hypersurfaces pair them with front verdicts of the dual front
    (A_{k+1}-inflection vs A_{k+1} front singularity).  Agreement means
    both sides are diagnosable with the same chain index.
    """
    if spec.kind in ("affine-hypersurface", "planar-curve"):
        primal = classify_inflection(spec, point, order, tol)
        comp = geo.component_jets(spec, point, order)
        if spec.normal is not None:
            nu = spec.normal_jets(point, order - 1)
        else:
            nu = geo.cofactor_normal(comp)
        chart = gauss_chart_jets(nu, tol)
        frame = geo.map_frame_from_jets(chart, point, tol.singular)
        dual = classify_front_from_frame(frame, tol)
    elif spec.kind == "projective-homogeneous":
        primal = classify_inflection(spec, point, order, tol)
        comp = geo.component_jets(spec, point, order)
        G = geo.dual_front_jets(comp)
        chart, normal = dual_chart_front([c.truncate(G[0].order) for c in comp], G)
        frame = geo.front_frame_from_jets(chart, normal, point, tol.singular)
        dual = classify_front_from_frame(frame, tol)
    else:
        raise ClassifyError(f"duality check undefined for kind {spec.kind!r}")

    if primal.family == "regular" and dual.family == "regular":
        agree = True
    else:
        agree = (
            primal.diagnosable
            and dual.diagnosable
            and primal.k is not None
            and primal.k == dual.k
        )
    return DualityReport(primal=primal, dual=dual, agree=agree)
