"""Built-in gradient-free operators and certification of their structure.

An operator is a continuous ``F(x, r, A)`` together with an admissibility
constraint ``Φ`` (or none).  The pair yields the branch
``Θ(x) = Φ(x) ∩ {F(x, ·) >= 0}``; the checks here verify on samples the
hypotheses under which that branch is proper elliptic, continuous and
compatible with the viscosity formulation of ``F = 0``.

Built-in kinds

===========================  =========================================  =====
kind                         F(x, r, A)                                 Φ
===========================  =========================================  =====
``hyperbolic_affine_sphere`` ``(-r)^(N+2) det A - h``                   Q
``monge_ampere``             ``-r det A - f``                           Q
``perturbed_ma``             ``g(m - r) det(A + M) - h``                ``{r <= m - r0, A + M >= 0}``
``special_lagrangian``       ``Σ arctan λ_i(A) - h``                    none
``linear``                   ``tr A - c r``                             none
===========================  =========================================  =====
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .constraint import Report, Verdict, solve_ray
from .elliptic_map import (
    BoxDomain,
    ContinuityCertificate,
    FiberJets,
    JetMap,
    _check_region,
    delta_search,
    fiber_boundary_jets,
)
from .errors import InvalidParameter
from .jetcore import Jet, SampleBox, eigvalsh, random_jets, random_q_elements

F_TOL = 1e-9
KINDS = ("hyperbolic_affine_sphere", "monge_ampere", "perturbed_ma", "special_lagrangian", "linear")


def f_tol(F) -> np.ndarray:
    """Absolute tolerance for comparisons of F values."""
    return F_TOL * (1.0 + np.abs(F))


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientField:
    """Scalar field on a uniform grid over a box, multilinearly interpolated.

    Points outside the box are evaluated by linear extrapolation.
    """

    domain: BoxDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != self.domain.dim or min(v.shape) < 2:
            raise InvalidParameter(
                f"coefficient grid of shape {v.shape} does not fit a {self.domain.dim}-d box (need >= 2 nodes per axis)"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidParameter("coefficient grid contains non-finite values")
        object.__setattr__(self, "values", v)
        axes = tuple(np.linspace(lo, hi, k) for lo, hi, k in zip(self.domain.lower, self.domain.upper, v.shape))
        object.__setattr__(self, "_interp", RegularGridInterpolator(axes, v, bounds_error=False, fill_value=None))

    @classmethod
    def sample(cls, fn, domain: BoxDomain, shape) -> "CoefficientField":
        if np.isscalar(fn):
            return cls(domain, np.full(shape, float(fn)))
        axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(domain.lower, domain.upper, shape)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(fn(mesh.reshape(-1, domain.dim)), dtype=float).reshape(shape)
        return cls(domain, vals)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self._interp(x)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the multilinear interpolant (Euclidean)."""
        total = 0.0
        for ax in range(self.values.ndim):
            step = (self.domain.upper[ax] - self.domain.lower[ax]) / (self.values.shape[ax] - 1)
            slope = np.abs(np.diff(self.values, axis=ax)).max() / step
            total += slope ** 2
        return math.sqrt(total)

    def to_json(self) -> dict:
        return {"grid_shape": list(self.values.shape), "values": self.values.reshape(-1).tolist()}


@dataclass(frozen=True)
class MonotoneProfile:
    """Increasing 1-d table with linear interpolation and linear extrapolation."""

    t: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if t.ndim != 1 or t.shape != g.shape or t.size < 2:
            raise InvalidParameter("g-profile needs matching 1-d tables with at least two entries")
        if not (np.all(np.diff(t) > 0) and np.all(np.diff(g) > 0)):
            raise InvalidParameter("g-profile must be strictly increasing in both columns")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "g", g)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.t, self.g)
        lo_slope = (self.g[1] - self.g[0]) / (self.t[1] - self.t[0])
        hi_slope = (self.g[-1] - self.g[-2]) / (self.t[-1] - self.t[-2])
        out = np.where(s < self.t[0], self.g[0] + lo_slope * (s - self.t[0]), out)
        out = np.where(s > self.t[-1], self.g[-1] + hi_slope * (s - self.t[-1]), out)
        return out

    def to_json(self) -> dict:
        return {"t": self.t.tolist(), "g": self.g.tolist()}


# ---------------------------------------------------------------------------
# operator specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    dim: int
    domain: BoxDomain
    eval_fn: Callable
    phi: JetMap | None = None
    coefficients: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    label: str = "op"
    spectral: Callable | None = None
    # per-pair slack (x, y, eta, delta) -> array, required >= 0 by check_RC
    rc_slack: Callable | None = None

    @property
    def constrained(self) -> bool:
        return self.phi is not None and not self.phi.improper

    def F(self, x, r, a) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        a = np.asarray(a, dtype=float)
        if a.ndim == 2:
            a = a[None]
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = np.broadcast_to(x, (r.shape[0], x.shape[0]))
        if self.spectral is not None:
            return np.asarray(self.spectral(x, r, eigvalsh(a)), dtype=float)
        return np.asarray(self.eval_fn(x, r, a), dtype=float)

    def F_lam(self, x, r, lam, a=None) -> np.ndarray:
        if self.spectral is not None:
            return np.asarray(self.spectral(x, r, lam), dtype=float)
        return np.asarray(self.eval_fn(x, r, a), dtype=float)

    def phi_margin(self, x, r, a, lam=None) -> np.ndarray:
        if not self.constrained:
            return np.ones(np.shape(r))
        if lam is not None and self.phi.spectral is not None:
            return self.phi.margin_lam(x, r, lam)
        return self.phi.margin(x, r, a)

    def to_json(self) -> dict:
        params = {}
        for k, v in self.params.items():
            params[k] = v.to_json() if hasattr(v, "to_json") else v
        return {
            "kind": self.kind,
            "dim": self.dim,
            "domain": {"lower": list(self.domain.lower), "upper": list(self.domain.upper)},
            "coefficients": {k: c.to_json() for k, c in sorted(self.coefficients.items())},
            "params": params,
        }


def _field(value, domain: BoxDomain, shape) -> CoefficientField:
    if isinstance(value, CoefficientField):
        return value
    if isinstance(value, np.ndarray) and value.ndim == domain.dim:
        return CoefficientField(domain, value)
    return CoefficientField.sample(value, domain, shape)


def _q_phi(domain: BoxDomain, n: int) -> JetMap:
    def sp(x, r, lam):
        return np.minimum(-r, lam[..., 0])

    return JetMap(domain, n, None, "Q", sp)


def make_builtin(kind: str, dim: int, domain: BoxDomain | None = None, coefficients: dict | None = None,
                 params: dict | None = None, grid_shape=None, validate: bool = True) -> OperatorSpec:
    """Construct a built-in operator.

    ``coefficients`` maps names to a constant, a callable on points of shape
    ``(n, d)``, a grid array or a :class:`CoefficientField`; analytic input
    is sampled onto a grid (``grid_shape``, 65 nodes per axis by default).
    ``validate=False`` skips the sign and monotonicity preconditions, which is
    useful for building deliberately broken fixtures.
    """
    if kind not in KINDS:
        raise InvalidParameter(f"unknown operator kind {kind!r}; expected one of {KINDS}")
    if dim < 1:
        raise InvalidParameter("dimension must be positive")
    domain = domain or BoxDomain.unit(dim)
    grid_shape = tuple(grid_shape or (65,) * domain.dim)
    coefficients = dict(coefficients or {})
    params = dict(params or {})
    n = dim

    def need(name, default=None):
        if name not in coefficients:
            if default is None:
                raise InvalidParameter(f"operator {kind!r} needs coefficient {name!r}")
            coefficients[name] = default
        f = _field(coefficients[name], domain, grid_shape)
        coefficients[name] = f
        return f

    if kind == "hyperbolic_affine_sphere":
        h = need("h")
        if validate and h.values.min() < 0:
            raise InvalidParameter("hyperbolic affine sphere needs h >= 0")

        def sp(x, r, lam):
            return (-r) ** (n + 2) * np.prod(lam, axis=-1) - h(x)

        def slack(xs, ys, eta, delta):
            base = eta ** (2 * n + 2)
            return np.minimum(base - (h(ys) - h(xs)), base - h.lipschitz * delta)

        return OperatorSpec(kind, n, domain, None, _q_phi(domain, n), coefficients, params,
                            f"hyperbolic_affine_sphere(N={n})", sp, slack)

    if kind == "monge_ampere":
        f = need("f")
        if validate and f.values.min() < 0:
            raise InvalidParameter("Monge-Ampere operator needs f >= 0")

        def sp(x, r, lam):
            return -r * np.prod(lam, axis=-1) - f(x)

        return OperatorSpec(kind, n, domain, None, _q_phi(domain, n), coefficients, params,
                            f"monge_ampere(N={n})", sp)

    if kind == "perturbed_ma":
        h = need("h")
        m = need("m", 0.0)
        mu = need("M", 0.0)
        r0 = float(params.get("r0", 0.0))
        prof = params.get("g", {"t": [-1.0, 1.0], "g": [-1.0, 1.0]})
        if not isinstance(prof, MonotoneProfile):
            prof = MonotoneProfile(np.asarray(prof["t"]), np.asarray(prof["g"]))
        params["g"] = prof
        params["r0"] = r0
        if validate:
            if h.values.min() < 0:
                raise InvalidParameter("perturbed Monge-Ampere needs h >= 0")
            if abs(float(prof(r0))) > 1e-12 * (1 + abs(r0)):
                raise InvalidParameter(f"perturbed Monge-Ampere needs g(r0) = 0, got g({r0}) = {float(prof(r0))}")

        def sp(x, r, lam):
            return prof(m(x) - r) * np.prod(lam + mu(x)[:, None], axis=-1) - h(x)

        def phi_sp(x, r, lam):
            return np.minimum(m(x) - r0 - r, lam[..., 0] + mu(x))

        phi = JetMap(domain, n, None, "Phi(m,M)", phi_sp)
        return OperatorSpec(kind, n, domain, None, phi, coefficients, params,
                            f"perturbed_ma(N={n})", sp)

    if kind == "special_lagrangian":
        h = need("h")
        if validate and (h.values.min() <= -n * math.pi / 2 or h.values.max() >= n * math.pi / 2):
            raise InvalidParameter("special Lagrangian phase h must lie in (-N pi/2, N pi/2)")

        def sp(x, r, lam):
            return np.arctan(lam).sum(axis=-1) - h(x)

        return OperatorSpec(kind, n, domain, None, None, coefficients, params,
                            f"special_lagrangian(N={n})", sp)

    # linear
    c = need("c")
    if validate and c.values.min() < 0:
        raise InvalidParameter("linear operator needs c >= 0")

    def sp(x, r, lam):
        return lam.sum(axis=-1) - c(x) * r

    return OperatorSpec(kind, n, domain, None, None, coefficients, params, f"linear(N={n})", sp)


def operator_from_json(data: dict, validate: bool = True) -> OperatorSpec:
    """Rebuild a built-in operator from its JSON form.

    Schema: ``{kind, dim, domain: {lower, upper}, coefficients: {name:
    {grid_shape, values} | number}, params}`` with row-major values.
    """
    if not isinstance(data, dict):
        raise InvalidParameter("operator spec must be a JSON object")
    try:
        kind = data["kind"]
        dim = int(data["dim"])
        dom = data.get("domain") or {}
        domain = BoxDomain(tuple(dom["lower"]), tuple(dom["upper"])) if dom else BoxDomain.unit(dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameter(f"operator spec is malformed: {exc}") from exc
    coefficients = {}
    for name, raw in (data.get("coefficients") or {}).items():
        if isinstance(raw, (int, float)):
            coefficients[name] = float(raw)
            continue
        try:
            shape = tuple(int(k) for k in raw["grid_shape"])
            vals = np.asarray(raw["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameter(f"coefficient {name!r} is malformed: {exc}") from exc
        if vals.size != int(np.prod(shape)):
            raise InvalidParameter(f"coefficient {name!r} has {vals.size} values for grid {shape}")
        coefficients[name] = CoefficientField(domain, vals.reshape(shape))
    return make_builtin(kind, dim, domain, coefficients, dict(data.get("params") or {}), validate=validate)


def custom_operator(dim: int, domain: BoxDomain, fn, label: str = "custom", phi: JetMap | None = None,
                    spectral: bool = False) -> OperatorSpec:
    """Wrap a user function ``fn(x, r, A)`` (or ``fn(x, r, λ)`` when ``spectral``)."""
    if spectral:
        return OperatorSpec("custom", dim, domain, None, phi, {}, {}, label, fn)
    return OperatorSpec("custom", dim, domain, fn, phi, {}, {}, label)


def theta_from_pair(op: OperatorSpec) -> JetMap:
    """The branch ``Θ(x) = Φ(x) ∩ {F(x, ·) >= 0}`` as a jet map."""
    label = f"Theta[{op.label}]"
    if not op.constrained:
        sp = op.spectral
        ev = op.eval_fn
        mf = (lambda x, r, a: op.F(x, r, a)) if sp is not None else ev
        return JetMap(op.domain, op.dim, mf, label, sp)
    phi = op.phi
    if op.spectral is not None and phi.spectral is not None:
        fs, ps = op.spectral, phi.spectral
        return JetMap(op.domain, op.dim, None, label, lambda x, r, lam: np.minimum(ps(x, r, lam), fs(x, r, lam)))
    return JetMap(op.domain, op.dim, lambda x, r, a: np.minimum(phi.margin(x, r, a), op.F(x, r, a)), label)


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleVerdict:
    sub: bool
    super: bool
    F: float
    phi_verdict: Verdict


def classify_jet(op: OperatorSpec, x, j: Jet) -> AdmissibleVerdict:
    x = np.asarray(x, dtype=float)
    if not bool(op.domain.contains(x)[0]):
        raise InvalidParameter("point lies outside the operator's domain")
    r = np.array([j.r])
    a = j.a.to_array()[None]
    F = float(op.F(x, r, a)[0])
    tol = float(f_tol(F))
    if op.constrained:
        g = float(op.phi.margin(x, r, a)[0])
        btol = op.phi.boundary_tol
        pv = Verdict.INSIDE if g > btol else (Verdict.OUTSIDE if g < -btol else Verdict.BOUNDARY)
    else:
        pv = Verdict.INSIDE
    sub = F >= -tol and pv != Verdict.OUTSIDE
    sup = F <= tol or pv != Verdict.INSIDE
    return AdmissibleVerdict(sub, sup, F, pv)


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

@dataclass
class PairCertificate:
    label: str
    conditions: dict
    budgets: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.conditions.values())

    def verdict(self, name: str) -> str:
        if name not in self.conditions:
            return "n/a"
        return "pass" if self.conditions[name].passed else "fail"

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "passed": self.passed,
            "conditions": {k: v.to_json() for k, v in sorted(self.conditions.items())},
            "budgets": self.budgets,
        }


def _jet(r, a) -> dict:
    return {"r": float(r), "A": np.asarray(a).tolist()}


def phi_members(op: OperatorSpec, xs: np.ndarray, box: SampleBox, per_x: int, rng,
                interior_fraction: float = 0.5, bands: int = 2) -> FiberJets:
    """Members of ``Φ(x)`` (random jets when unconstrained), with the apex probe."""
    n = op.dim
    if op.constrained:
        return fiber_boundary_jets(op.phi, xs, box, per_x, rng, bands=bands,
                                   interior_fraction=interior_fraction)
    k = xs.shape[0]
    jets = random_jets(SampleBox(box.r_range, box.eig_scale, box.seed, k * max(per_x - 1, 1)), n, rng)
    r = np.concatenate([jets.r, np.zeros(k)])
    a = np.concatenate([jets.a, np.zeros((k, n, n))])
    xi = np.concatenate([np.tile(np.arange(k), max(per_x - 1, 1)), np.arange(k)])
    return FiberJets(xi, r, a, eigvalsh(a))


def _check_pep(op, xs, jets, rng) -> Report:
    n = op.dim
    x = xs[jets.xi]
    F0 = op.F_lam(x, jets.r, jets.lam, jets.a)
    qs, qp = random_q_elements(rng, n, len(jets))
    r1, a1 = jets.r + qs, jets.a + qp
    lam1 = eigvalsh(a1)
    F1 = op.F_lam(x, r1, lam1, a1)
    bad = F1 < F0 - f_tol(F0)
    if op.constrained:
        bad |= op.phi_margin(x, r1, a1, lam1) < -op.phi.boundary_tol * (1 + np.abs(r1) + np.abs(lam1).max(-1))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        return Report("PEP", False, len(jets), {"x": x[k].tolist(), "jet": _jet(jets.r[k], jets.a[k]),
                                                "translate": _jet(qs[k], qp[k]),
                                                "F": float(F0[k]), "F_translate": float(F1[k])})
    return Report("PEP", True, len(jets))


def _check_pb1(op, xs, jets) -> Report:
    """A zero of F inside Φ(x) for every sampled x, found along the monotone ray."""
    n = op.dim
    k = xs.shape[0]
    x = xs[jets.xi]
    F0 = op.F_lam(x, jets.r, jets.lam, jets.a)
    # per x, a Φ-member with F <= 0 to start the upward search from
    start = np.full(k, -1)
    for idx in np.flatnonzero(F0 <= 0):
        if start[jets.xi[idx]] < 0:
            start[jets.xi[idx]] = idx
    missing = np.flatnonzero(start < 0)
    if missing.size:
        i = int(missing[0])
        sel = jets.xi == i
        return Report("PB1", False, len(jets), {
            "x": xs[i].tolist(),
            "reason": "no sampled member of Phi(x) has F <= 0",
            "min_F": float(F0[sel].min()) if sel.any() else None,
        })
    sj = jets.take(start)
    sp = op.spectral
    if sp is not None:
        def at(t, idx):
            return sp(xs[idx], sj.r[idx] - t, sj.lam[idx] + t[:, None])
    else:
        def at(t, idx):
            return op.eval_fn(xs[idx], sj.r[idx] - t, sj.a[idx] + t[:, None, None] * np.eye(n))
    t = solve_ray(at, k)
    bad = np.isnan(t)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return Report("PB1", False, k, {"x": xs[i].tolist(), "reason": "F stays negative along the ray",
                                        "start": _jet(sj.r[i], sj.a[i])})
    return Report("PB1", True, k, None, {"max_ray_parameter": float(np.max(t))})


def _check_pb2(op, xs, box, per_x, rng) -> Report:
    bj = fiber_boundary_jets(op.phi, xs, box, per_x, rng, bands=1)
    x = xs[bj.xi]
    F = op.F_lam(x, bj.r, bj.lam, bj.a)
    bad = F > f_tol(F)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        return Report("PB2", False, len(bj), {"x": x[k].tolist(), "jet": _jet(bj.r[k], bj.a[k]), "F": float(F[k])})
    return Report("PB2", True, len(bj))


def _check_ndc(op, xs, box, per_x, rng) -> Report:
    """F > 0 strictly on interior jets of Θ (boundary jets pushed inward)."""
    theta = theta_from_pair(op)
    bj = fiber_boundary_jets(theta, xs, box, per_x, rng, bands=2)
    n = op.dim
    kappa = np.exp(rng.uniform(math.log(1e-2), 0.0, size=len(bj)))
    r = bj.r - kappa
    lam = bj.lam + kappa[:, None]
    a = bj.a + kappa[:, None, None] * np.eye(n)
    x = xs[bj.xi]
    F = op.F_lam(x, r, lam, a)
    bad = ~(F > 0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        return Report("NDC", False, len(bj), {"x": x[k].tolist(), "jet": _jet(r[k], a[k]), "F": float(F[k]),
                                              "depth": float(kappa[k])})
    return Report("NDC", True, len(bj))


def _check_fuc(op, xs) -> Report:
    """For every x some jet has F < 0 (descending from the origin along (1, -I))."""
    n = op.dim
    k = xs.shape[0]
    lam0 = np.zeros((k, n))
    r0 = np.zeros(k)
    sp = op.spectral
    if sp is not None:
        def at(t, idx):
            return -sp(xs[idx], r0[idx] + t, lam0[idx] - t[:, None])
    else:
        def at(t, idx):
            return -op.eval_fn(xs[idx], r0[idx] + t, -t[:, None, None] * np.eye(n))
    # root of -F along the ray; a strictly negative F lies just beyond it
    t = solve_ray(at, k)
    bad = np.isnan(t)
    if not bad.any():
        probe = np.maximum(2 * np.abs(t), 1e-3) + 1.0
        Fp = -at(probe, np.arange(k))
        bad = ~(Fp < 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return Report("F_UC", False, k, {"x": xs[i].tolist(), "reason": "no jet with F < 0 found"})
    return Report("F_UC", True, k)


def certify_pair(op: OperatorSpec, region: BoxDomain | None = None, box: SampleBox | None = None,
                 n_points: int = 256, jets_per_x: int = 40) -> PairCertificate:
    """Sampled verification of the structural hypotheses of the pair ``(F, Φ)``."""
    region = _check_region(op.phi or theta_from_pair(op), region)
    box = box or SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    jets = phi_members(op, xs, box, jets_per_x, rng)
    conds = {"PEP": _check_pep(op, xs, jets, rng), "PB1": _check_pb1(op, xs, jets)}
    if op.constrained:
        conds["PB2"] = _check_pb2(op, xs, box, jets_per_x, rng)
    else:
        conds["F_UC"] = _check_fuc(op, xs)
    conds["NDC"] = _check_ndc(op, xs, box, jets_per_x, rng)
    return PairCertificate(op.label, conds, {"x_points": int(xs.shape[0]), "jets_per_x": int(jets_per_x),
                                             "seed": int(box.seed)})


def check_RC(op: OperatorSpec, etas, region: BoxDomain | None = None, box: SampleBox | None = None,
             n_points: int = 1000, jets_per_x: int = 30, max_halvings: int = 20) -> ContinuityCertificate:
    """Certify ``F(y, r - η, A + ηI) >= F(x, r, A)`` on ``Φ(x)`` for ``|x - y| < δ(η)``.

    ``δ`` may scale like a high power of ``η`` (for the hyperbolic affine
    sphere like ``η^(2N+2)``), so deeper schedules than the default are often
    needed; below ``δ`` of the order of the F tolerance a sampled violation
    can no longer be told apart from rounding.  When the operator carries a slack
    hook (the closed-form lower bound of the increment), it must also be
    nonnegative on every sampled pair; its minimum is logged per ``η``.
    """
    region = _check_region(op.phi or theta_from_pair(op), region)
    box = box or SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    jets = phi_members(op, xs, box, jets_per_x, rng)
    n = op.dim
    F0 = op.F_lam(xs[jets.xi], jets.r, jets.lam, jets.a)

    def violations(x, y, fj, eta):
        a1 = fj.a + eta * np.eye(n) if op.spectral is None else None
        F1 = op.F_lam(y, fj.r - eta, fj.lam + eta, a1)
        return F1 < F0 - f_tol(F0), {}

    return delta_search(f"RC[{op.label}]", etas, region, box.seed + 1, xs, jets, violations,
                        max_halvings, op.rc_slack)


def correspondence_check(op: OperatorSpec, region: BoxDomain | None = None, box: SampleBox | None = None,
                         n_points: int = 200, jets_per_x: int = 50, probe: float = 1e-6) -> Report:
    """Compare the supersolution flag with "not interior to Θ(x)" on samples.

    Interiority is decided by two probes: ``j + ε(1, -I)`` in Θ means
    interior and ``j + ε(-1, I)`` outside Θ means exterior; jets where the
    probes disagree are within ``ε`` of the boundary and are skipped.
    """
    theta = theta_from_pair(op)
    region = _check_region(theta, region)
    box = box or SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    n = op.dim
    k = xs.shape[0]
    jets = random_jets(SampleBox(box.r_range, box.eig_scale, box.seed, k * jets_per_x), n, rng)
    xi = np.tile(np.arange(k), jets_per_x)
    x = xs[xi]
    r, a = jets.r, jets.a
    lam = eigvalsh(a)
    eps = probe * (1.0 + np.maximum(np.abs(r), np.abs(lam).max(-1)))

    def theta_m(rr, ll, aa):
        if theta.spectral is not None:
            return theta.margin_lam(x, rr, ll)
        return theta.margin(x, rr, aa)

    eye = np.eye(n)
    inner = theta_m(r + eps, lam - eps[:, None], a - eps[:, None, None] * eye) >= 0
    outer = theta_m(r - eps, lam + eps[:, None], a + eps[:, None, None] * eye) < 0
    decided = inner | outer
    F = op.F_lam(x, r, lam, a)
    phi_in = op.phi_margin(x, r, a, lam) > (op.phi.boundary_tol if op.constrained else -np.inf)
    # undecided jets (within eps of the boundary) are skipped, so the sign of
    # F is used as is; a tolerance would misread degenerate operators such
    # as (-r)^(N+2) det A where h vanishes, which are tiny but positive
    super_flag = (F <= 0.0) | ~phi_in
    mismatch = decided & (super_flag != ~inner)
    idx = np.flatnonzero(mismatch)
    listed = [{"x": x[i].tolist(), "jet": _jet(r[i], a[i]), "F": float(F[i]),
               "super": bool(super_flag[i]), "interior": bool(inner[i])} for i in idx[:20]]
    return Report("correspondence", idx.size == 0, int(decided.sum()),
                  listed[0] if listed else None,
                  {"mismatches": int(idx.size), "skipped_near_boundary": int((~decided).sum()),
                   "listed": listed})
