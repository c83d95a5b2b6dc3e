"""Global structures over two-dimensional real parameter domains.

Pipeline: sample the Hessian determinant (or the degeneracy determinant)
on a lattice, extract its zero curves by marching squares with Newton
refinement, walk each curve for sign changes of psi = dh(asymptotic
direction), certify the crossings as A3-inflection points (godrons),
sign each godron by the Hessian's sign on the tail side of the dual
front's self-intersection, compute the Euler characteristic of the
negative region from a signed complex, and assemble the census identity

    (#positive godrons) - (#negative godrons) = 2 * chi(negative region).

Domains are boxes with optional periodic identifications; the census
requires either a torus-type domain (both variables periodic) or an
empty negative region.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.optimize

from . import geometry as geo
from .classify import (
    DEFAULT_TOL,
    SingularityClass,
    Tolerances,
    classify_inflection,
    duality_check,
)
from .jets import Jet, directional_derivative
from .mapspec import MapSpec


class HypothesisViolation(Exception):
    """The surface has inflection points outside the A2/A3 families (or a
    degenerate curve point), so the census identity does not apply."""

    def __init__(self, message: str, points: list | None = None, verdicts=None):
        super().__init__(message)
        self.points = points or []
        self.verdicts = verdicts or []


class UnresolvedGodronSign(Exception):
    """No self-intersection of the dual front was found near a godron."""


class RegionResolutionError(Exception):
    """Sign ambiguity survived the maximal subdivision depth."""

    def __init__(self, message: str, cells: list):
        super().__init__(message)
        self.cells = cells


# -- batched scalar fields ----------------------------------------------------


def hessian_curve_data(spec: MapSpec, us, vs, order: int = 4):
    """Batched h, grad h, asymptotic direction and psi = dh(xi) at points.

    The asymptotic direction is the unit adjugate column of larger norm,
    chosen per point; callers re-align signs along curves.
    """
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    hj = geo.hessian_jets(spec, (us, vs), order)
    h = hj.h
    hval = np.asarray(h.value(), dtype=float) + np.zeros_like(us)
    grad = [np.asarray(g, dtype=float) + np.zeros_like(us) for g in h.gradient()]
    a, b = hj.hess[0][0], hj.hess[0][1]
    c, d = hj.hess[1][0], hj.hess[1][1]
    cols = [(d, -1.0 * c), (-1.0 * b, a)]
    psis = []
    xis = []
    norms = []
    for col in cols:
        x0 = np.asarray(col[0].value(), dtype=float) + np.zeros_like(us)
        x1 = np.asarray(col[1].value(), dtype=float) + np.zeros_like(us)
        nrm = np.hypot(x0, x1)
        psi = directional_derivative(h, [col[0], col[1]])
        psival = np.asarray(psi.value(), dtype=float) + np.zeros_like(us)
        psis.append(psival)
        xis.append((x0, x1))
        norms.append(nrm)
    pick = norms[1] > norms[0]
    safe0 = np.where(norms[0] == 0.0, 1.0, norms[0])
    safe1 = np.where(norms[1] == 0.0, 1.0, norms[1])
    psi = np.where(pick, psis[1] / safe1, psis[0] / safe0)
    xi_u = np.where(pick, xis[1][0] / safe1, xis[0][0] / safe0)
    xi_v = np.where(pick, xis[1][1] / safe1, xis[0][1] / safe0)
    degenerate = np.maximum(norms[0], norms[1]) == 0.0
    return {
        "h": hval,
        "grad": np.stack(grad, axis=-1),
        "psi": psi,
        "xi": np.stack([xi_u, xi_v], axis=-1),
        "xi_degenerate": degenerate,
    }


def h_values(spec: MapSpec, us, vs) -> np.ndarray:
    us = np.asarray(us, dtype=float)
    hj = geo.hessian_jets(spec, (us, np.asarray(vs, dtype=float)), 2)
    return np.asarray(hj.h.value(), dtype=float) + np.zeros_like(us)


def lambda_values(spec: MapSpec, us, vs):
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    order = 3
    comp = spec.jets((us, vs), order)
    n = spec.nvars
    partials = geo.jacobian_jets(comp)
    if spec.ncomps == n:
        matrix = [[partials[i][j] for j in range(n)] for i in range(n)]
    else:
        nu = spec.normal_jets((us, vs), order - 1)
        if nu is None:
            nu = geo.cofactor_normal(comp)
        depth = min(j.order for j in nu)
        matrix = [
            [partials[i][j].truncate(depth) for j in range(n)] + [nu[i].truncate(depth)]
            for i in range(n + 1)
        ]
    from .jets import jet_det

    lam = jet_det(matrix)
    val = np.asarray(lam.value(), dtype=float) + np.zeros_like(us)
    grad = [np.asarray(g, dtype=float) + np.zeros_like(us) for g in lam.gradient()]
    return val, np.stack(grad, axis=-1)


# -- lattice -------------------------------------------------------------------


@dataclass
class Lattice:
    spec: MapSpec
    nu: int
    nv: int
    us: np.ndarray  # 1-d sample coordinates per axis
    vs: np.ndarray
    periodic_u: bool
    periodic_v: bool
    values: np.ndarray  # shape (nu_samples, nv_samples)

    @property
    def du(self) -> float:
        return float(self.us[1] - self.us[0])

    @property
    def dv(self) -> float:
        return float(self.vs[1] - self.vs[0])


def build_lattice(spec: MapSpec, grid: int, which: str = "h") -> Lattice:
    if spec.nvars != 2 or spec.field != "real":
        raise ValueError("lattice tracing needs a real two-parameter map")
    (iu, iv) = spec.domain
    pu, pv = iu.periodic, iv.periodic
    nu_samples = grid if pu else grid + 1
    nv_samples = grid if pv else grid + 1
    us = iu.lo + (iu.hi - iu.lo) * np.arange(nu_samples) / grid
    vs = iv.lo + (iv.hi - iv.lo) * np.arange(nv_samples) / grid
    UU, VV = np.meshgrid(us, vs, indexing="ij")
    if which == "h":
        vals = h_values(spec, UU.ravel(), VV.ravel()).reshape(UU.shape)
    elif which == "lambda":
        vals, _ = lambda_values(spec, UU.ravel(), VV.ravel())
        vals = vals.reshape(UU.shape)
    else:
        raise ValueError(f"unknown field {which!r}")
    return Lattice(spec, grid, grid, us, vs, pu, pv, vals)


# -- marching squares ----------------------------------------------------------


def _cell_crossings(lat: Lattice):
    """Per-cell zero-curve segments as pairs of edge identifiers.

    Edge ids: ("h", i, j) joins samples (i,j)-(i+1,j); ("v", i, j) joins
    (i,j)-(i,j+1).  Saddles are resolved by the cell-center value.
    """
    vals = lat.values
    nx = vals.shape[0] - (0 if lat.periodic_u else 1)
    ny = vals.shape[1] - (0 if lat.periodic_v else 1)

    def sample(i, j):
        return vals[i % vals.shape[0], j % vals.shape[1]]

    segments = []
    centers_needed = []
    cells = []
    for i in range(nx):
        for j in range(ny):
            s = [sample(i, j), sample(i + 1, j), sample(i + 1, j + 1), sample(i, j + 1)]
            neg = [x < 0.0 for x in s]
            if all(neg) or not any(neg):
                continue
            cells.append((i, j, s, neg))
    # center values for saddle cells, batched
    saddles = [c for c in cells if c[3] in ([True, False, True, False], [False, True, False, True])]
    centers = {}
    if saddles:
        cu = np.array([lat.us[0] + (c[0] + 0.5) * lat.du for c in saddles])
        cv = np.array([lat.vs[0] + (c[1] + 0.5) * lat.dv for c in saddles])
        cvals = _center_values(lat, cu, cv)
        for c, val in zip(saddles, cvals):
            centers[(c[0], c[1])] = float(val)
    for (i, j, s, neg) in cells:
        edges = [("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)]
        # crossings on cell sides, in cyclic order c0-c1-c2-c3
        side_cross = []
        corners = [0, 1, 2, 3]
        for a, b, e in ((0, 1, edges[0]), (1, 2, edges[1]), (2, 3, edges[2]), (3, 0, edges[3])):
            if neg[a] != neg[b]:
                side_cross.append((a, b, e))
        if len(side_cross) == 2:
            segments.append(((i, j), side_cross[0][2], side_cross[1][2]))
        elif len(side_cross) == 4:
            cval = centers[(i, j)]
            # crossings in cyclic order: between (0,1),(1,2),(2,3),(3,0).
            # The connected side pairs with the corners of the center's sign.
            e01, e12, e23, e30 = (side_cross[0][2], side_cross[1][2], side_cross[2][2], side_cross[3][2])
            if neg[0] != (cval < 0.0):
                segments.append(((i, j), e30, e01))
                segments.append(((i, j), e12, e23))
            else:
                segments.append(((i, j), e01, e12))
                segments.append(((i, j), e23, e30))
    return segments


def _center_values(lat: Lattice, cu, cv):
    if lat.spec is None:
        raise ValueError("lattice lost its spec")
    return h_values(lat.spec, cu, cv)


def _edge_endpoints(lat: Lattice, e):
    kind, i, j = e
    u0 = lat.us[0] + i * lat.du
    v0 = lat.vs[0] + j * lat.dv
    if kind == "h":
        return (u0, v0), (u0 + lat.du, v0)
    return (u0, v0), (u0, v0 + lat.dv)


def _edge_values(lat: Lattice, e):
    kind, i, j = e
    vals = lat.values
    a = vals[i % vals.shape[0], j % vals.shape[1]]
    if kind == "h":
        b = vals[(i + 1) % vals.shape[0], j % vals.shape[1]]
    else:
        b = vals[i % vals.shape[0], (j + 1) % vals.shape[1]]
    return float(a), float(b)


def _canonical_edge(lat: Lattice, e):
    kind, i, j = e
    if lat.periodic_u:
        i = i % lat.nu
    if lat.periodic_v:
        j = j % lat.nv
    return (kind, i, j)


@dataclass
class TracedCurve:
    """Ordered polyline on the zero set with per-vertex analysis data."""

    points: np.ndarray           # (k, 2) refined vertices (wrapped coordinates)
    closed: bool
    h: np.ndarray
    grad: np.ndarray             # (k, 2)
    psi: np.ndarray              # aligned dh(xi)
    xi: np.ndarray               # (k, 2) aligned unit asymptotic directions
    flat: bool                   # |psi| negligible relative to |grad h| everywhere
    wrap_flip: bool              # asymptotic line field reverses around a closed curve
    degenerate_nodes: np.ndarray # vertices where grad h nearly vanishes
    refine_tol: float

    def __len__(self):
        return len(self.points)


def _newton_refine(spec: MapSpec, pts: np.ndarray, scale: float, tol_rel: float = 1e-12, max_iter: int = 30):
    """Project points onto {h=0} by damped Newton steps along grad h."""
    pts = pts.copy()
    target = tol_rel * max(scale, 1e-300)
    for _ in range(max_iter):
        data = hessian_curve_data(spec, pts[:, 0], pts[:, 1], order=3)
        h = data["h"]
        g = data["grad"]
        gn2 = np.sum(g * g, axis=-1)
        live = (np.abs(h) > target) & (gn2 > 1e-30)
        if not np.any(live):
            break
        step = np.zeros_like(pts)
        step[live] = (h[live] / gn2[live])[:, None] * g[live]
        cand = pts - step
        hc = h_values(spec, cand[:, 0], cand[:, 1])
        worse = np.abs(hc) > np.abs(h)
        # one halving pass for the rare overshoot
        if np.any(worse & live):
            cand2 = pts - 0.5 * step
            hc2 = h_values(spec, cand2[:, 0], cand2[:, 1])
            sel = worse & live
            cand[sel] = cand2[sel]
            hc[sel] = hc2[sel]
        pts[live] = cand[live]
    return pts


def trace_zero_curve(spec: MapSpec, which: str = "h", grid: int = 64, tol: Tolerances = DEFAULT_TOL) -> list[TracedCurve]:
    """Zero curves of the Hessian (or degeneracy) determinant on the domain.

    Marching-squares seeding on a grid x grid lattice with periodic
    identifications, followed by Newton refinement and orientation.
    """
    if grid < 16:
        raise ValueError("grid must be at least 16")
    lat = build_lattice(spec, grid, which)
    scale = float(np.max(np.abs(lat.values))) or 1.0
    segments = _cell_crossings(lat)

    # connectivity graph on canonical edge ids
    adj: dict = {}
    for cell, e1, e2 in segments:
        a, b = _canonical_edge(lat, e1), _canonical_edge(lat, e2)
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    def crossing_position(e):
        (p0, p1) = _edge_endpoints(lat, e)
        va, vb = _edge_values(lat, e)
        t = va / (va - vb)
        t = min(max(t, 0.0), 1.0)
        return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))

    visited = set()
    chains = []
    # open chains first (nodes of degree 1), then closed loops
    starts = [n for n, nb in adj.items() if len(nb) == 1]
    for seed_pass in (starts, list(adj.keys())):
        for start in seed_pass:
            if start in visited or start not in adj:
                continue
            chain = [start]
            visited.add(start)
            prev = None
            cur = start
            while True:
                nxt = [n for n in adj[cur] if n != prev and n not in visited]
                if not nxt:
                    closed = any(n == start for n in adj[cur]) and len(chain) > 2
                    break
                prev, cur = cur, nxt[0]
                visited.add(cur)
                chain.append(cur)
            if len(chain) >= 2:
                chains.append((chain, closed))

    curves = []
    for chain, closed in chains:
        pts = np.array([crossing_position(e) for e in chain])
        if which == "h":
            pts = _newton_refine(spec, pts, scale)
            data = hessian_curve_data(spec, pts[:, 0], pts[:, 1], order=4)
            h = data["h"]
            grad = data["grad"]
            psi = data["psi"].copy()
            xi = data["xi"].copy()
            # orient so the tangent matches grad h rotated by +90 degrees
            if len(pts) > 1:
                t0 = pts[1] - pts[0]
                r0 = np.array([-grad[0, 1], grad[0, 0]])
                if float(np.dot(t0, r0)) < 0.0:
                    pts = pts[::-1].copy()
                    h = h[::-1].copy()
                    grad = grad[::-1].copy()
                    psi = psi[::-1].copy()
                    xi = xi[::-1].copy()
            # align the asymptotic line field along the curve; psi transports
            # with the same sign since psi = dh(xi)
            for i in range(1, len(pts)):
                if float(np.sum(xi[i] * xi[i - 1])) < 0.0:
                    xi[i] = -xi[i]
                    psi[i] = -psi[i]
            wrap_flip = False
            if closed and len(pts) > 2:
                wrap_flip = float(np.sum(xi[0] * xi[-1])) < 0.0
            gn = np.linalg.norm(grad, axis=-1)
            gscale = float(np.max(gn)) or 1.0
            degen = gn < 1e-8 * gscale
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(gn > 0, np.abs(psi) / gn, 0.0)
            flat = bool(np.max(rel) < 1e-6)
            curves.append(
                TracedCurve(
                    points=pts,
                    closed=closed,
                    h=h,
                    grad=grad,
                    psi=psi,
                    xi=xi,
                    flat=flat,
                    wrap_flip=wrap_flip,
                    degenerate_nodes=degen,
                    refine_tol=1e-9 * scale,
                )
            )
        else:
            curves.append(
                TracedCurve(
                    points=pts,
                    closed=closed,
                    h=np.zeros(len(pts)),
                    grad=np.zeros((len(pts), 2)),
                    psi=np.zeros(len(pts)),
                    xi=np.zeros((len(pts), 2)),
                    flat=True,
                    wrap_flip=False,
                    degenerate_nodes=np.zeros(len(pts), dtype=bool),
                    refine_tol=1e-9 * scale,
                )
            )
    return curves

# -- godrons -------------------------------------------------------------------


@dataclass
class Godron:
    """A certified A3-inflection point with its census data."""

    point: tuple
    sign: int | None
    verdict: SingularityClass
    tail_samples: list
    pair_points: list


@dataclass
class GodronCensus:
    """Signed godron count together with the topology of the negative region."""

    surface: str
    grid: int
    godrons: list[Godron]
    i2_plus: int
    i2_minus: int
    chi_negative: int | None
    chi_positive: int | None
    residual: int | None
    curves: list[TracedCurve]
    flat_curves: int
    tol: Tolerances

    @property
    def total(self) -> int:
        return self.i2_plus + self.i2_minus

    @property
    def parity_even(self) -> bool:
        return self.total % 2 == 0

    def describe(self) -> dict:
        return {
            "surface": self.surface,
            "grid": self.grid,
            "godrons": [
                {
                    "point": list(g.point),
                    "sign": g.sign,
                    "verdict": g.verdict.describe(),
                }
                for g in self.godrons
            ],
            "i2_plus": self.i2_plus,
            "i2_minus": self.i2_minus,
            "chi_negative": self.chi_negative,
            "chi_positive": self.chi_positive,
            "residual": self.residual,
            "total_godrons": self.total,
            "parity_even": self.parity_even,
            "curve_count": len(self.curves),
            "flat_curves": self.flat_curves,
            "tol_zero": self.tol.zero,
            "tol_rank": self.tol.rank,
        }


def _segment_psi(spec: MapSpec, pts: np.ndarray, xi_ref: np.ndarray):
    data = hessian_curve_data(spec, pts[:, 0], pts[:, 1], order=4)
    psi = data["psi"].copy()
    xi = data["xi"]
    flip = np.sum(xi * xi_ref[None, :], axis=-1) < 0.0
    psi[flip] = -psi[flip]
    return psi


def _unwrap_pair(spec: MapSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Continuous representative of b relative to a across periodic wraps."""
    out = b.copy()
    for k, iv in enumerate(spec.domain):
        if iv.periodic:
            width = iv.hi - iv.lo
            d = out[k] - a[k]
            if d > width / 2:
                out[k] -= width
            elif d < -width / 2:
                out[k] += width
    return out


def _refine_crossing(spec: MapSpec, a, b, xi_ref, scale, max_iter: int = 60):
    """Bisection for the zero of psi along the curve between a and b."""
    a = np.asarray(a, dtype=float)
    b = _unwrap_pair(spec, a, np.asarray(b, dtype=float))

    def eval_point(p):
        q = _newton_refine(spec, p[None, :], scale)
        psi = _segment_psi(spec, q, xi_ref)
        return q[0], float(psi[0])

    pa, fa = eval_point(a)
    pb, fb = eval_point(b)
    if fa == 0.0:
        return pa, fa
    if fb == 0.0:
        return pb, fb
    if fa * fb > 0:
        # no crossing after refinement; report midpoint for diagnostics
        mid, fm = eval_point(0.5 * (a + b))
        return mid, fm
    lo, hi, flo = a, b, fa
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pm, fm = eval_point(mid)
        if fm == 0.0 or np.linalg.norm(hi - lo) < 1e-14:
            return pm, fm
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return eval_point(0.5 * (lo + hi))


def find_godrons(
    spec: MapSpec,
    curves: list[TracedCurve],
    tol: Tolerances = DEFAULT_TOL,
    order: int = 6,
    a2_samples_per_curve: int = 24,
) -> tuple[list[Godron], list[TracedCurve]]:
    """Locate and certify the A3-inflection points on traced zero curves.

    Sign changes of psi = dh(asymptotic direction) along each non-flat
    curve are refined by bisection and classified; every refined crossing
    must certify as an A3-inflection point and sampled off-crossing points
    must certify as A2, otherwise the census hypotheses fail.  Curves with
    psi identically negligible (rotationally flat contact) carry no
    godrons and are flagged.
    """
    godrons: list[Godron] = []
    flat_curves: list[TracedCurve] = []
    bad_points = []
    bad_verdicts = []
    for curve in curves:
        if curve.flat:
            flat_curves.append(curve)
            continue
        pts = curve.points
        psi = curve.psi
        k = len(pts)
        if k < 3:
            continue
        if np.any(curve.degenerate_nodes):
            idx = int(np.argmax(curve.degenerate_nodes))
            raise HypothesisViolation(
                "degenerate point (vanishing dh) on the inflection curve",
                points=[tuple(pts[idx])],
            )
        pscale = float(np.max(np.abs(psi))) or 1.0
        hscale = float(np.max(np.abs(curve.h))) + pscale
        pairs = range(k if (curve.closed and not curve.wrap_flip) else k - 1)
        crossing_slots = []
        for i in pairs:
            j = (i + 1) % k
            a, b = psi[i], psi[j]
            if a == 0.0:
                continue
            if a * b < 0.0:
                crossing_slots.append((i, j))
        for (i, j) in crossing_slots:
            p, f = _refine_crossing(spec, pts[i], pts[j], curve.xi[i], hscale)
            verdict = classify_inflection(spec, tuple(p), order=order, tol=tol)
            if verdict.family == "inflection" and verdict.k == 2:
                godrons.append(Godron(tuple(p), None, verdict, [], []))
            else:
                bad_points.append(tuple(p))
                bad_verdicts.append(verdict)
        # suspicious non-crossing minima of |psi| hide higher-order contact
        for i in range(1, k - 1):
            if (
                abs(psi[i]) < 1e-3 * pscale
                and abs(psi[i]) <= abs(psi[i - 1])
                and abs(psi[i]) <= abs(psi[i + 1])
                and psi[i - 1] * psi[i + 1] > 0.0
            ):
                p, f = _golden_min(spec, pts[i - 1], pts[i + 1], curve.xi[i], hscale)
                if abs(f) < 1e-6 * pscale:
                    verdict = classify_inflection(spec, tuple(p), order=order, tol=tol)
                    if not (verdict.family == "inflection" and verdict.k in (1, 2)):
                        bad_points.append(tuple(p))
                        bad_verdicts.append(verdict)
        # sampled A2 certification away from the crossings
        stride = max(1, k // a2_samples_per_curve)
        for i in range(0, k, stride):
            if abs(psi[i]) < 0.05 * pscale:
                continue
            verdict = classify_inflection(spec, tuple(pts[i]), order=order, tol=tol)
            if not (verdict.family == "inflection" and verdict.k == 1):
                bad_points.append(tuple(pts[i]))
                bad_verdicts.append(verdict)
    if bad_points:
        raise HypothesisViolation(
            "inflection points outside the A2/A3 families on the zero curve",
            points=bad_points,
            verdicts=bad_verdicts,
        )
    return godrons, flat_curves


def _golden_min(spec: MapSpec, a, b, xi_ref, scale, iters: int = 50):
    a = np.asarray(a, dtype=float)
    b = _unwrap_pair(spec, a, np.asarray(b, dtype=float))
    phi = (np.sqrt(5.0) - 1.0) / 2.0

    def f(t):
        p = a + t * (b - a)
        q = _newton_refine(spec, p[None, :], scale)
        return q[0], abs(float(_segment_psi(spec, q, xi_ref)[0]))

    lo, hi = 0.0, 1.0
    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    pc, fc = f(c)
    pd, fd = f(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - phi * (hi - lo)
            pc, fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + phi * (hi - lo)
            pd, fd = f(d)
    return (pc, fc) if fc < fd else (pd, fd)


# -- godron signs via the dual front's self-intersection ------------------------


def godron_sign(
    spec: MapSpec,
    point,
    eta: np.ndarray,
    search_scale: float = 0.05,
    tol: Tolerances = DEFAULT_TOL,
) -> tuple[int, list, list]:
    """Sign of a godron: +1 when the Hessian is negative on the tail side.

    Solves for nearby parameter pairs with equal dual-front image (the
    swallowtail self-intersection), then samples h at the pair midpoints.
    Returns (sign, tail samples, pair points).
    """
    p = np.asarray(point, dtype=float)
    order = 3
    G0 = geo.dual_front(spec, tuple(p), order=2)
    gvals = [abs(j.value()) for j in G0]
    ell = int(np.argmax(gvals))

    def chart(q):
        G = geo.dual_front(spec, (float(q[0]), float(q[1])), order=1)
        vals = [j.value() for j in G]
        if abs(vals[ell]) < 1e-14:
            return None
        return np.array([vals[i] / vals[ell] for i in range(len(vals)) if i != ell])

    eta = np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    tau = np.array([-eta[1], eta[0]])

    def residual(x, delta):
        a, b, theta = x
        c = p + a * tau + b * eta
        d = delta * (np.cos(theta) * tau + np.sin(theta) * eta)
        g1 = chart(c + d)
        g2 = chart(c - d)
        if g1 is None or g2 is None:
            return np.full(3, 1e6)
        return g1 - g2

    deltas = [search_scale, search_scale / 2.0, search_scale / 4.0]
    midpoints = []
    pairs = []
    for delta in deltas:
        found = None
        for a0 in (2 * delta**2, -2 * delta**2, delta, -delta, 4 * delta**2, -4 * delta**2):
            sol = scipy.optimize.least_squares(
                residual,
                x0=np.array([a0, 0.0, np.pi / 2]),
                args=(delta,),
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                max_nfev=200,
            )
            if not sol.success:
                continue
            a, b, theta = sol.x
            c = p + a * tau + b * eta
            d = delta * (np.cos(theta) * tau + np.sin(theta) * eta)
            scale = max(np.linalg.norm(chart(c + d) or [1.0]), 1.0)
            if np.linalg.norm(sol.fun) > 1e-9 * scale:
                continue
            if np.linalg.norm(c - p) > 8 * search_scale:
                continue
            found = (c, c + d, c - d)
            break
        if found is None:
            raise UnresolvedGodronSign(
                f"no dual-front self-intersection found near godron {tuple(p)}"
            )
        midpoints.append(found[0])
        pairs.append((found[1], found[2]))

    hs = h_values(spec, np.array([m[0] for m in midpoints]), np.array([m[1] for m in midpoints]))
    signs = np.sign(hs)
    if not np.all(signs == signs[0]) or signs[0] == 0.0:
        raise UnresolvedGodronSign(
            f"inconsistent Hessian signs {hs} on the tail side near godron {tuple(p)}"
        )
    sign = 1 if signs[0] < 0 else -1
    return sign, [tuple(m) for m in midpoints], [(tuple(q1), tuple(q2)) for q1, q2 in pairs]


# -- Euler characteristic of the negative region --------------------------------


@dataclass
class SignedTriangulation:
    """Triangulated subcomplex of one sign region on the sampled domain."""

    grid: int
    vertex_count: int
    edge_count: int
    triangle_count: int
    ambiguous_cells: list

    @property
    def euler(self) -> int:
        return self.vertex_count - self.edge_count + self.triangle_count


def _region_complex(lat: Lattice, negative: bool) -> SignedTriangulation:
    """CW complex of {h<0} (or {h>0}) from the lattice, with saddles split
    by the center sample; counts V - E + F after fanning the cell polygons."""
    vals = lat.values if negative else -lat.values
    nx = vals.shape[0] - (0 if lat.periodic_u else 1)
    ny = vals.shape[1] - (0 if lat.periodic_v else 1)

    def wrapv(i, j):
        return (i % vals.shape[0] if lat.periodic_u else i,
                j % vals.shape[1] if lat.periodic_v else j)

    def sample(i, j):
        a, b = wrapv(i, j)
        return vals[a, b]

    def vkey(i, j):
        a, b = wrapv(i, j)
        return ("v", a, b)

    def ekey(kind, i, j):
        if lat.periodic_u:
            i = i % lat.nu
        if lat.periodic_v:
            j = j % lat.nv
        return ("x", kind, i, j)

    vertices = set()
    edges = set()
    faces = 0
    ambiguous = []

    # collect saddle centers in one batch
    saddle_cells = []
    for i in range(nx):
        for j in range(ny):
            neg = [sample(i, j) < 0, sample(i + 1, j) < 0, sample(i + 1, j + 1) < 0, sample(i, j + 1) < 0]
            if neg in ([True, False, True, False], [False, True, False, True]):
                saddle_cells.append((i, j))
    centers = {}
    if saddle_cells:
        cu = np.array([lat.us[0] + (i + 0.5) * lat.du for i, _ in saddle_cells])
        cv = np.array([lat.vs[0] + (j + 0.5) * lat.dv for _, j in saddle_cells])
        cvals = _center_values(lat, cu, cv)
        if not negative:
            cvals = -cvals
        for (i, j), val in zip(saddle_cells, cvals):
            if val == 0.0:
                ambiguous.append((i, j))
            centers[(i, j)] = float(val)

    for i in range(nx):
        for j in range(ny):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            cedges = [("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)]
            s = [sample(*c) for c in corners]
            neg = [x < 0 for x in s]
            if not any(neg):
                continue
            # cyclic boundary walk with crossings inserted
            cyc = []
            for a in range(4):
                b = (a + 1) % 4
                cyc.append(("corner", a))
                if neg[a] != neg[b]:
                    cyc.append(("cross", a))
            if all(neg):
                polys = [[vkey(*corners[0]), vkey(*corners[1]), vkey(*corners[2]), vkey(*corners[3])]]
            else:
                # arcs of consecutive negative corners delimited by crossings
                m = len(cyc)
                start = None
                for idx, (kind, a) in enumerate(cyc):
                    if kind == "cross":
                        start = idx
                        break
                arcs = []
                cur = None
                for step in range(m + 1):
                    kind, a = cyc[(start + step) % m]
                    if kind == "cross":
                        key = ekey(*cedges[a])
                        if cur is not None:
                            cur.append(key)
                            if len(cur) > 2:
                                arcs.append(cur)
                            cur = None
                        if step < m:
                            cur = [key]
                    elif cur is not None:
                        if neg[a]:
                            cur.append(vkey(*corners[a]))
                        else:
                            cur = None
                neg_arcs = arcs
                if len(neg_arcs) == 1:
                    polys = [neg_arcs[0]]
                elif len(neg_arcs) == 2:
                    cval = centers.get((i, j), 0.0)
                    if cval < 0:
                        polys = [neg_arcs[0] + neg_arcs[1]]
                    else:
                        polys = neg_arcs
                else:
                    polys = neg_arcs
            for poly in polys:
                if len(poly) < 3:
                    continue
                faces += len(poly) - 2
                for q in range(len(poly)):
                    vertices.add(poly[q])
                    edges.add(frozenset((poly[q], poly[(q + 1) % len(poly)])))
                # fan diagonals are interior to the cell, keyed by it
                for q in range(2, len(poly) - 1):
                    edges.add(frozenset(((("cell", i, j), poly[0], poly[q]),)))
    return SignedTriangulation(
        grid=lat.nu,
        vertex_count=len(vertices),
        edge_count=len(edges),
        triangle_count=faces,
        ambiguous_cells=ambiguous,
    )


def euler_characteristic_region(
    spec: MapSpec, grid: int = 128, negative: bool = True, max_depth: int = 3
) -> int:
    """Euler characteristic of the region where h has the requested sign.

    Recomputes on doubled grids until two consecutive resolutions agree;
    raises when the refinement budget is exhausted or signs stay ambiguous.
    """
    prev = None
    for depth in range(max_depth + 1):
        g = grid * (2**depth)
        lat = build_lattice(spec, g, "h")
        tri = _region_complex(lat, negative)
        if tri.ambiguous_cells:
            if depth == max_depth:
                raise RegionResolutionError(
                    "sign-ambiguous cells at maximal refinement", tri.ambiguous_cells
                )
            continue
        chi = tri.euler
        if prev is not None and chi == prev:
            return chi
        prev = chi
    raise RegionResolutionError(
        f"Euler characteristic did not stabilize by grid {grid * 2 ** max_depth}", []
    )


def euler_characteristic_negative(spec: MapSpec, grid: int = 128, max_depth: int = 3) -> int:
    both_periodic = all(iv.periodic for iv in spec.domain)
    lat = build_lattice(spec, max(grid // 4, 16), "h")
    if np.all(lat.values > 0):
        return 0
    if not both_periodic:
        raise ValueError(
            "Euler characteristic needs a torus-type domain unless the negative region is empty"
        )
    return euler_characteristic_region(spec, grid, negative=True, max_depth=max_depth)


# -- full census ----------------------------------------------------------------


def godron_census(
    spec: MapSpec,
    grid: int = 256,
    order: int = 6,
    tol: Tolerances = DEFAULT_TOL,
    euler_grid: int | None = None,
    search_scale: float = 0.05,
    threads: int = 1,
) -> GodronCensus:
    """Trace, certify, sign and count the godrons of a surface and verify
    the signed count against twice the Euler characteristic of the
    negative region."""
    curves = trace_zero_curve(spec, "h", grid, tol)
    godrons, flats = find_godrons(spec, curves, tol, order)

    def signed(g: Godron) -> Godron:
        hd = geo.hessian_data(spec, g.point)
        eta = hd.asymptotic
        if eta is None:
            raise UnresolvedGodronSign(f"no asymptotic direction at godron {g.point}")
        s, tail, pairs = godron_sign(spec, g.point, eta, search_scale, tol)
        g.sign = s
        g.tail_samples = tail
        g.pair_points = pairs
        return g

    if threads > 1 and len(godrons) > 1:
        import concurrent.futures

        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            godrons = list(pool.map(signed, godrons))
    else:
        godrons = [signed(g) for g in godrons]

    i2p = sum(1 for g in godrons if g.sign == 1)
    i2m = sum(1 for g in godrons if g.sign == -1)

    both_periodic = all(iv.periodic for iv in spec.domain)
    chi_neg = chi_pos = residual = None
    eg = euler_grid or max(grid // 2, 64)
    if both_periodic:
        chi_neg = euler_characteristic_region(spec, eg, negative=True)
        chi_pos = euler_characteristic_region(spec, eg, negative=False)
        residual = i2p - i2m - 2 * chi_neg
    else:
        lat = build_lattice(spec, max(grid // 4, 16), "h")
        if np.all(lat.values > 0):
            chi_neg, chi_pos, residual = 0, None, i2p - i2m
    return GodronCensus(
        surface=spec.name,
        grid=grid,
        godrons=godrons,
        i2_plus=i2p,
        i2_minus=i2m,
        chi_negative=chi_neg,
        chi_positive=chi_pos,
        residual=residual,
        curves=curves,
        flat_curves=len(flats),
        tol=tol,
    )
