"""Grid-level potential theory on uniform tensor grids.

All checks act on grid samples of twice-differentiable (or semiconvex)
functions: the discrete 2-jet at a node is ``(u(x), D²u(x))`` with the
Hessian taken from central differences.  A grid pass is evidence for the
continuum statement, not a proof; every report carries that caveat in its
``note`` field.
"""

from __future__ import annotations

import base64
import itertools
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constraint import Report
from .elliptic_map import BoxDomain, JetMap, dual_map
from .errors import InvalidParameter
from .jetcore import SymMat, eigvalsh

log = logging.getLogger(__name__)

GRID_NOTE = "grid check: necessary condition on samples, not a proof of the continuum statement"


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Values on a uniform grid over a box, with an optional inside mask.

    Nodes outside the mask do not belong to Ω.  Boundary nodes are inside
    nodes lying on a face of the box or having a stencil neighbour (any of
    the ``3^d - 1`` surrounding nodes) outside the mask; the rest are
    interior nodes, where the full Hessian stencil is available.
    """

    lower: tuple
    upper: tuple
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        lo = tuple(float(t) for t in self.lower)
        hi = tuple(float(t) for t in self.upper)
        if v.ndim != len(lo) or len(lo) != len(hi):
            raise InvalidParameter(f"values of shape {v.shape} do not match a {len(lo)}-d box")
        if min(v.shape) < 2:
            raise InvalidParameter("grid needs at least two nodes per axis")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidParameter("grid box needs lower < upper")
        mask = np.ones(v.shape, dtype=bool) if self.mask is None else np.asarray(self.mask, dtype=bool)
        if mask.shape != v.shape:
            raise InvalidParameter("mask shape differs from values shape")
        if not np.all(np.isfinite(v[mask])):
            raise InvalidParameter("grid values must be finite on the domain")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    # construction ---------------------------------------------------------

    @classmethod
    def from_function(cls, fn, lower, upper, shape, mask_fn=None) -> "GridFunction":
        lower = tuple(float(t) for t in lower)
        upper = tuple(float(t) for t in upper)
        shape = tuple(int(k) for k in shape)
        axes = [np.linspace(a, b, k) for a, b, k in zip(lower, upper, shape)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        flat = pts.reshape(-1, len(shape))
        mask = None
        if mask_fn is not None:
            mask = np.asarray(mask_fn(flat), dtype=bool).reshape(shape)
        vals = np.asarray(fn(flat), dtype=float).reshape(shape)
        if mask is not None:
            vals = np.where(mask, vals, 0.0)
        return cls(lower, upper, vals, mask)

    def with_values(self, values) -> "GridFunction":
        values = np.where(self.mask, values, 0.0)
        return GridFunction(self.lower, self.upper, values, self.mask)

    # geometry -------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def steps(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / (np.asarray(self.shape) - 1)

    @property
    def domain(self) -> BoxDomain:
        return BoxDomain(self.lower, self.upper)

    def axes(self) -> list:
        return [np.linspace(a, b, k) for a, b, k in zip(self.lower, self.upper, self.shape)]

    def coords(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def node_coords(self, node) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(node) * self.steps

    @property
    def interior_mask(self) -> np.ndarray:
        inner = self.mask.copy()
        # faces of the box
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            inner[tuple(sl)] = False
            sl[ax] = -1
            inner[tuple(sl)] = False
        padded = np.pad(self.mask, 1, constant_values=False)
        for off in itertools.product((-1, 0, 1), repeat=self.dim):
            sl = tuple(slice(1 + o, 1 + o + k) for o, k in zip(off, self.shape))
            inner &= padded[sl]
        return inner

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.mask & ~self.interior_mask

    def interpolate(self, x) -> np.ndarray:
        interp = RegularGridInterpolator(self.axes(), self.values, bounds_error=False, fill_value=None)
        return interp(np.atleast_2d(x))

    def max_abs(self) -> float:
        return float(np.abs(self.values[self.mask]).max())

    # arithmetic -----------------------------------------------------------

    def _compatible(self, other: "GridFunction"):
        if self.shape != other.shape or not np.allclose(self.lower, other.lower) or not np.allclose(self.upper, other.upper):
            raise InvalidParameter("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._compatible(other)
            return GridFunction(self.lower, self.upper, self.values + other.values, self.mask & other.mask)
        return self.with_values(self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return self + (-other)
        return self + (-float(other))

    def __neg__(self):
        return GridFunction(self.lower, self.upper, -self.values, self.mask)

    def maximum(self, other: "GridFunction") -> "GridFunction":
        self._compatible(other)
        return GridFunction(self.lower, self.upper, np.maximum(self.values, other.values), self.mask & other.mask)

    # serialization --------------------------------------------------------

    def to_json(self, encoding: str = "b64") -> dict:
        out = {"dims": self.dim, "lower": list(self.lower), "upper": list(self.upper),
               "resolution": list(self.shape)}
        flat = np.ascontiguousarray(self.values, dtype="<f8").reshape(-1)
        if encoding == "b64":
            out["values_b64"] = base64.b64encode(flat.tobytes()).decode("ascii")
        else:
            out["values"] = flat.tolist()
        if not self.mask.all():
            out["mask"] = self.mask.reshape(-1).astype(int).tolist()
        return out

    @classmethod
    def from_json(cls, data: dict, base_dir: str = ".") -> "GridFunction":
        try:
            d = int(data["dims"])
            lower, upper = list(data["lower"]), list(data["upper"])
            shape = tuple(int(k) for k in data["resolution"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameter(f"grid header is malformed: {exc}") from exc
        if len(lower) != d or len(upper) != d or len(shape) != d:
            raise InvalidParameter("grid header dimensions disagree")
        count = int(np.prod(shape))
        if "values_b64" in data:
            raw = base64.b64decode(data["values_b64"])
            vals = np.frombuffer(raw, dtype="<f8")
        elif "values" in data:
            vals = np.asarray([np.nan if v is None else v for v in data["values"]], dtype=float)
        elif "sidecar" in data:
            vals = np.fromfile(os.path.join(base_dir, data["sidecar"]), dtype="<f8")
        else:
            raise InvalidParameter("grid file has no values")
        if vals.size != count:
            raise InvalidParameter(f"grid has {vals.size} values, header says {count}")
        mask = None
        if "mask" in data:
            mask = np.asarray(data["mask"], dtype=bool).reshape(shape)
        return cls(tuple(lower), tuple(upper), vals.reshape(shape).copy(), mask)

    def save(self, path: str, encoding: str = "b64"):
        with open(path, "w") as fh:
            json.dump(self.to_json(encoding), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "GridFunction":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameter(f"cannot read grid file {path}: {exc}") from exc
        return cls.from_json(data, os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# discrete jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteJet:
    node: tuple
    value: float
    hessian: SymMat


def _shift(v: np.ndarray, off) -> np.ndarray:
    """``v`` evaluated at ``node + off`` (edge-padded; only interior nodes are used)."""
    padded = np.pad(v, 1, mode="edge")
    sl = tuple(slice(1 + o, 1 + o + k) for o, k in zip(off, v.shape))
    return padded[sl]


def hessian_field(u: GridFunction) -> np.ndarray:
    """Central-difference Hessians at every node, shape ``u.shape + (d, d)``.

    Diagonal entries use the 3-point second difference, mixed entries the
    4-point cross; both are exact for quadratics.  Entries at non-interior
    nodes are meaningless.
    """
    d = u.dim
    v = u.values
    h = u.steps
    out = np.zeros(v.shape + (d, d))
    for i in range(d):
        e = [0] * d
        e[i] = 1
        em = [-t for t in e]
        out[..., i, i] = (_shift(v, e) - 2 * v + _shift(v, em)) / h[i] ** 2
        for j in range(i + 1, d):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            val = (_shift(v, pp) - _shift(v, pm) - _shift(v, [-t for t in pm]) + _shift(v, [-t for t in pp]))
            val = val / (4 * h[i] * h[j])
            out[..., i, j] = val
            out[..., j, i] = val
    return out


def discrete_jet(u: GridFunction, node) -> DiscreteJet:
    node = tuple(int(k) for k in node)
    if len(node) != u.dim or not all(0 <= k < s for k, s in zip(node, u.shape)):
        raise InvalidParameter(f"node {node} is not on the grid")
    if not u.interior_mask[node]:
        raise InvalidParameter(f"node {node} has no full stencil (boundary node)")
    H = hessian_field(u)[node]
    return DiscreteJet(node, float(u.values[node]), SymMat.from_array(H))


def _default_tol(u: GridFunction, C: float | None = None) -> float:
    C = 10.0 * (1.0 + u.max_abs()) if C is None else C
    return C * float(np.max(u.steps)) ** 2


def _node_list(u: GridFunction, mask: np.ndarray, extra: np.ndarray | None = None, limit: int = 50) -> list:
    idx = np.argwhere(mask)
    out = []
    for node in idx[:limit]:
        item = {"node": [int(k) for k in node], "x": u.node_coords(node).tolist()}
        if extra is not None:
            item["value"] = float(extra[tuple(node)])
        out.append(item)
    return out


# ---------------------------------------------------------------------------
# sup-convolution and semiconvexity
# ---------------------------------------------------------------------------

def sup_convolution(u: GridFunction, eps: float) -> GridFunction:
    """``u^ε(x) = max_z u(x - z) - |z|²/ε`` over lattice offsets ``|z|² <= 2εM``.

    ``M = max|u|``; larger offsets cannot compete, and points off the grid
    (or outside the mask) count as ``-inf``.
    """
    if not eps > 0:
        raise InvalidParameter("eps must be positive")
    M = u.max_abs()
    rad = math.sqrt(2.0 * eps * M)
    h = u.steps
    reach = [int(math.floor(rad / hk + 1e-12)) for hk in h]
    base = np.where(u.mask, u.values, -np.inf)
    padded = np.pad(base, [(k, k) for k in reach], constant_values=-np.inf)
    best = base.copy()
    for off in itertools.product(*[range(-k, k + 1) for k in reach]):
        z = np.asarray(off) * h
        z2 = float(z @ z)
        if z2 > rad * rad * (1 + 1e-12) or z2 == 0.0:
            continue
        # u(x - z): shift by -off
        sl = tuple(slice(k - o, k - o + s) for k, o, s in zip(reach, off, u.shape))
        cand = padded[sl] - z2 / eps
        np.maximum(best, cand, out=best)
    return u.with_values(np.where(u.mask, best, 0.0))


def _directions(d: int) -> list:
    dirs = []
    for i in range(d):
        e = [0] * d
        e[i] = 1
        dirs.append(e)
        for j in range(i + 1, d):
            for s in (1, -1):
                e2 = [0] * d
                e2[i], e2[j] = 1, s
                dirs.append(e2)
    return dirs


def check_semiconvex(u: GridFunction, lam: float, tol: float = 1e-9) -> Report:
    """Axis and diagonal second differences of ``u + λ|x|²/2`` are ``>= -tol(1+|u|)/h²``."""
    if lam < 0:
        raise InvalidParameter("lambda must be nonnegative")
    x = u.coords()
    v = u.values + 0.5 * lam * np.sum(x ** 2, axis=-1)
    hmin = float(np.min(u.steps))
    worst = np.inf
    fails = np.zeros(u.shape, dtype=bool)
    for e in _directions(u.dim):
        step = np.asarray(e) * u.steps
        length2 = float(step @ step)
        ok = u.mask & _shift(u.mask, e) & _shift(u.mask, [-t for t in e])
        for ax, t in enumerate(e):
            if t != 0:
                sl = [slice(None)] * u.dim
                sl[ax] = 0
                ok[tuple(sl)] = False
                sl[ax] = -1
                ok[tuple(sl)] = False
        d2 = (_shift(v, e) - 2 * v + _shift(v, [-t for t in e])) / length2
        bound = -tol * (1 + np.abs(u.values)) / hmin ** 2
        bad = ok & (d2 < bound)
        fails |= bad
        if ok.any():
            worst = min(worst, float(d2[ok].min()))
    return Report("semiconvex", not fails.any(), int(u.mask.sum()),
                  _node_list(u, fails)[0] if fails.any() else None,
                  {"lambda": lam, "min_second_difference": worst, "failing_nodes": _node_list(u, fails),
                   "note": GRID_NOTE})


# ---------------------------------------------------------------------------
# subaffine, Q-dual subharmonic, zero maximum principle
# ---------------------------------------------------------------------------

def _lambda_max(u: GridFunction) -> np.ndarray:
    H = hessian_field(u)
    out = np.full(u.shape, np.nan)
    inner = u.interior_mask
    if inner.any():
        out[inner] = eigvalsh(H[inner])[..., -1]
    return out


def _dyadic_boxes(shape) -> list:
    boxes = []
    level = 0
    while True:
        parts = 2 ** level
        sizes = [(s - 1) / parts for s in shape]
        if min(sizes) < 3:  # fewer than 4 nodes per axis
            break
        for idx in itertools.product(range(parts), repeat=len(shape)):
            lo = [int(round(i * sz)) for i, sz in zip(idx, sizes)]
            hi = [int(round((i + 1) * sz)) for i, sz in zip(idx, sizes)]
            boxes.append((lo, hi))
        level += 1
    return boxes


def _affine_comparison(w: GridFunction, tol: float):
    """Nodes exceeding the lifted least-squares plane over some dyadic sub-box."""
    x = w.coords()
    fails = np.zeros(w.shape, dtype=bool)
    worst = -np.inf
    gb = w.boundary_mask
    for lo, hi in _dyadic_boxes(w.shape):
        sl = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
        sub_mask = w.mask[sl]
        face = np.zeros(sub_mask.shape, dtype=bool)
        for ax in range(w.dim):
            s2 = [slice(None)] * w.dim
            s2[ax] = 0
            face[tuple(s2)] = True
            s2[ax] = -1
            face[tuple(s2)] = True
        bd = sub_mask & (face | gb[sl])
        inside = sub_mask & ~bd
        if bd.sum() < w.dim + 1 or not inside.any():
            continue
        xb = x[sl][bd]
        wb = w.values[sl][bd]
        design = np.column_stack([xb, np.ones(xb.shape[0])])
        coef, *_ = np.linalg.lstsq(design, wb, rcond=None)
        lift = np.max(wb - design @ coef)
        coef[-1] += lift
        xi = x[sl][inside]
        excess = w.values[sl][inside] - (np.column_stack([xi, np.ones(xi.shape[0])]) @ coef)
        worst = max(worst, float(excess.max()))
        bad_local = np.zeros(sub_mask.shape, dtype=bool)
        bad_local[inside] = excess > tol
        fails[sl] |= bad_local
    return fails, worst


def _plus_jet_ok(w: GridFunction, tol: float) -> np.ndarray:
    """Node verdicts for ``w⁺`` being subaffine.

    Where ``w > tol`` the positive part coincides with ``w`` near the node, so
    its jet is that of ``w``; where ``w <= tol`` the node is (numerically) a
    minimum of ``w⁺`` and passes.
    """
    lmax = _lambda_max(w)
    inner = w.interior_mask
    ok = np.ones(w.shape, dtype=bool)
    pos = inner & (w.values > tol)
    ok[pos] = lmax[pos] >= -tol
    return ok


def check_subaffine(w: GridFunction, mode: str = "hessian", tol: float | None = None,
                    plus_test: str = "hessian") -> Report:
    """Subaffinity of ``w`` (``mode='hessian'`` or ``'affine_comparison'``) or of ``w⁺`` (``'plus'``)."""
    tol = _default_tol(w) if tol is None else tol
    inner = w.interior_mask
    if mode == "hessian":
        lmax = _lambda_max(w)
        fails = inner & (lmax < -tol)
        details = {"min_lambda_max": float(np.nanmin(lmax)) if inner.any() else None}
    elif mode == "affine_comparison":
        fails, worst = _affine_comparison(w, tol)
        details = {"max_excess": worst}
    elif mode == "plus":
        if plus_test == "hessian":
            fails = inner & ~_plus_jet_ok(w, tol)
            details = {}
        else:
            wp = w.with_values(np.maximum(w.values, 0.0))
            fails, worst = _affine_comparison(wp, tol)
            details = {"max_excess": worst}
    else:
        raise InvalidParameter(f"unknown subaffine mode {mode!r}")
    details.update({"mode": mode, "tol": tol, "failing_nodes": _node_list(w, fails, w.values), "note": GRID_NOTE})
    return Report(f"subaffine[{mode}]", not fails.any(), int(inner.sum()),
                  details["failing_nodes"][0] if fails.any() else None, details)


def qdual_node_verdicts(w: GridFunction, tol: float) -> np.ndarray:
    """Per interior node: ``w <= tol`` or ``λ_N(D²w) >= -tol``."""
    lmax = _lambda_max(w)
    inner = w.interior_mask
    ok = np.ones(w.shape, dtype=bool)
    ok[inner] = (w.values[inner] <= tol) | (lmax[inner] >= -tol)
    return ok


def check_qdual_subharmonic(w: GridFunction, tol: float | None = None) -> Report:
    tol = _default_tol(w) if tol is None else tol
    ok = qdual_node_verdicts(w, tol)
    plus_ok = _plus_jet_ok(w, tol)
    inner = w.interior_mask
    fails = inner & ~ok
    disagree = inner & (ok != plus_ok)
    return Report("qdual_subharmonic", not fails.any(), int(inner.sum()),
                  _node_list(w, fails, w.values)[0] if fails.any() else None,
                  {"tol": tol, "failing_nodes": _node_list(w, fails, w.values),
                   "plus_mode_disagreements": int(disagree.sum()), "note": GRID_NOTE})


@dataclass
class ComparisonVerdict:
    passed: bool
    violations: list
    max_violation: float
    status: str = "ok"
    preconditions: dict = field(default_factory=dict)
    theorem_contradiction: bool = False

    def to_json(self) -> dict:
        return {"pass": self.passed, "violations": self.violations, "max_violation": self.max_violation,
                "status": self.status, "preconditions": self.preconditions,
                "theorem_contradiction": self.theorem_contradiction, "note": GRID_NOTE}


def zmp_check(w: GridFunction, tol: float | None = None) -> ComparisonVerdict:
    """Zero maximum principle: ``w <= 0`` on the boundary forces ``w <= 0`` inside."""
    tol = _default_tol(w) if tol is None else tol
    pre = check_qdual_subharmonic(w, tol)
    if not pre.passed:
        return ComparisonVerdict(False, [], math.nan, "precondition-failed",
                                 {"qdual_subharmonic": pre.to_json()})
    bd = w.boundary_mask
    if w.values[bd].max() > tol:
        return ComparisonVerdict(True, [], float(w.values[bd].max()), "vacuous",
                                 {"qdual_subharmonic": True, "boundary_max": float(w.values[bd].max())})
    bad = w.mask & (w.values > tol)
    viol = _node_list(w, bad, w.values)
    mx = float(w.values[w.mask].max())
    return ComparisonVerdict(not bad.any(), viol, mx, "ok", {"qdual_subharmonic": True})


# ---------------------------------------------------------------------------
# Θ-subharmonicity and comparison
# ---------------------------------------------------------------------------

def _jets(u: GridFunction):
    inner = u.interior_mask
    H = hessian_field(u)[inner]
    return inner, u.values[inner], H


def check_subharmonic(u: GridFunction, m: JetMap, side: str = "sub", C: float | None = None) -> Report:
    """Discrete jets of ``u`` against the map ``m``.

    ``side='sub'``: ``J_x u`` must lie in ``Θ(x)``; ``side='super'``: the
    negated jet must lie in the dual fiber.  A jet within the discretization
    slack ``τ = C h²`` of the set along the monotone direction is accepted.
    """
    if side not in ("sub", "super"):
        raise InvalidParameter("side must be 'sub' or 'super'")
    if u.dim != m.dim or u.dim != m.domain.dim:
        raise InvalidParameter(f"grid dimension {u.dim} does not match map dimensions ({m.domain.dim}, {m.dim})")
    tau = _default_tol(u, C)
    inner, r, A = _jets(u)
    x = u.coords()[inner]
    target = m if side == "sub" else dual_map(m)
    if side == "super":
        r, A = -r, -A
    n = m.dim
    g = target.margin(x, r - tau, A + tau * np.eye(n))
    norm = np.maximum(np.abs(r), np.abs(eigvalsh(A)).max(-1)) if r.size else np.zeros(0)
    bad_flat = g < -m.boundary_tol * (1 + norm)
    fails = np.zeros(u.shape, dtype=bool)
    fails[inner] = bad_flat
    margins = np.full(u.shape, np.nan)
    margins[inner] = g
    listed = _node_list(u, fails, margins)
    return Report(f"{side}harmonic[{m.label}]", not fails.any(), int(inner.sum()),
                  listed[0] if listed else None,
                  {"slack": tau, "failing_nodes": listed, "failing_count": int(fails.sum()), "note": GRID_NOTE})


def subharmonic_addition_test(u: GridFunction, utilde: GridFunction, m: JetMap) -> Report:
    """``u`` sub for Θ and ``ũ`` sub for Θ̃ should give a Q̃-subharmonic sum."""
    pu = check_subharmonic(u, m, "sub")
    pt = check_subharmonic(utilde, dual_map(m), "sub")
    if not (pu.passed and pt.passed):
        failed = [name for name, rep in (("u", pu), ("utilde", pt)) if not rep.passed]
        return Report("subharmonic_addition", False, 0, {"precondition_failed": failed},
                      {"u": pu.to_json(), "utilde": pt.to_json()})
    w = u + utilde
    tol = _default_tol(u) + _default_tol(utilde)
    rep = check_qdual_subharmonic(w, tol)
    return Report("subharmonic_addition", rep.passed, rep.samples, rep.witness, rep.details)


def compare(u: GridFunction, v: GridFunction, m: JetMap, tol: float | None = None) -> ComparisonVerdict:
    """Grid comparison principle for a sub/super pair of ``m``.

    The precondition checks accept jets within a slack ``τ`` of the fiber,
    which is the same as saying ``ū = u + (τ_u/2)(|x|² - ω)`` is exactly
    subharmonic and ``v̄ = v - (τ_v/2)(|x|² - ω)`` exactly superharmonic
    (``ω = 2 + max|x|²``).  The comparison is therefore applied to ``ū - v̄``,
    on the boundary and inside alike.
    """
    u._compatible(v)
    tol = max(_default_tol(u), _default_tol(v)) if tol is None else tol
    pu = check_subharmonic(u, m, "sub")
    pv = check_subharmonic(v, m, "super")
    pre = {"u_sub": pu.passed, "v_super": pv.passed,
           "u_slack": pu.details["slack"], "v_slack": pv.details["slack"]}
    if not pu.passed or not pv.passed:
        pre["u_failing_nodes"] = pu.details["failing_nodes"]
        pre["v_failing_nodes"] = pv.details["failing_nodes"]
        return ComparisonVerdict(False, [], math.nan, "precondition-failed", pre)
    mask = u.mask & v.mask
    x2 = np.sum(u.coords() ** 2, axis=-1)
    omega = 2.0 + float(x2[mask].max())
    diff = u.values - v.values + 0.5 * (pre["u_slack"] + pre["v_slack"]) * (x2 - omega)
    pre["raw_max_difference"] = float((u.values - v.values)[mask].max())
    bd = u.boundary_mask & mask
    if diff[bd].max() > tol:
        pre["boundary_max"] = float(diff[bd].max())
        return ComparisonVerdict(True, [], float(diff[mask].max()), "vacuous", pre)
    bad = mask & (diff > tol)
    viol = _node_list(u, bad, diff)
    contradiction = bool(bad.any())
    if contradiction:
        log.warning("THEOREM-CONTRADICTION: comparison violated at %d nodes with verified preconditions: %s",
                    int(bad.sum()), json.dumps(viol))
    return ComparisonVerdict(not contradiction, viol, float(diff[mask].max()),
                             "THEOREM-CONTRADICTION" if contradiction else "ok", pre, contradiction)


# ---------------------------------------------------------------------------
# uniform translation
# ---------------------------------------------------------------------------

def translate_perturb(u: GridFunction, y, eta: float, margin: float) -> GridFunction:
    """``u_{y;η}(x) = u(x + y) + (η/2)(|x|² - ω)`` on the box shrunk by ``margin``.

    ``ω = 2 + max |x|²`` over the grid.  Lattice shifts are exact; other
    shifts use multilinear interpolation.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != u.dim:
        raise InvalidParameter("shift has the wrong dimension")
    if margin < 0 or (np.linalg.norm(y) >= margin and np.any(y != 0)):
        raise InvalidParameter(f"|y| = {np.linalg.norm(y):g} must be below the margin {margin:g}")
    x = u.coords()
    omega = 2.0 + float(np.max(np.sum(x ** 2, axis=-1)))
    lo = np.asarray(u.lower) + margin
    hi = np.asarray(u.upper) - margin
    keep_axes = []
    for ax, a in enumerate(u.axes()):
        sel = np.flatnonzero((a >= lo[ax] - 1e-12) & (a <= hi[ax] + 1e-12))
        if sel.size < 2:
            raise InvalidParameter("margin leaves fewer than two nodes on some axis")
        keep_axes.append(sel)
    sl = tuple(slice(s[0], s[-1] + 1) for s in keep_axes)
    xs = x[sl]
    shift_nodes = y / u.steps
    if np.allclose(shift_nodes, np.round(shift_nodes), atol=1e-9):
        off = np.round(shift_nodes).astype(int)
        src = tuple(slice(s.start + o, s.stop + o) for s, o in zip(sl, off))
        shifted = u.values[src]
        smask = u.mask[src]
    else:
        pts = (xs + y).reshape(-1, u.dim)
        shifted = u.interpolate(pts).reshape(xs.shape[:-1])
        mf = RegularGridInterpolator(u.axes(), u.mask.astype(float), bounds_error=False, fill_value=0.0)
        smask = mf(pts).reshape(xs.shape[:-1]) > 1 - 1e-12
    vals = shifted + 0.5 * eta * (np.sum(xs ** 2, axis=-1) - omega)
    mask = u.mask[sl] & smask
    new_lo = tuple(float(a[s[0]]) for a, s in zip(u.axes(), keep_axes))
    new_hi = tuple(float(a[s[-1]]) for a, s in zip(u.axes(), keep_axes))
    return GridFunction(new_lo, new_hi, np.where(mask, vals, 0.0), mask)
