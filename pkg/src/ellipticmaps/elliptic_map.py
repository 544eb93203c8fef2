"""Jet-valued maps over box domains and their continuity certification.

A :class:`JetMap` assigns to each point ``x`` of a box a constraint set
``Θ(x) = {g(x; r, A) >= 0}``.  Continuity is certified through the
translation criterion: for each ``η`` find ``δ`` such that
``Θ(x) + (-η, ηI) ⊂ Θ(y)`` whenever ``|x - y| < δ``.

Truncation uses the clamp ``ψ_M(r) = max(-M, min(M, r))``, the continuous,
odd and monotone cut-off at level ``M``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .constraint import (
    DEFAULT_TOL,
    ConstraintSet,
    q_distance,
    sample_members,
    solve_ray,
    spectral_set,
)
from .errors import InvalidParameter
from .jetcore import SampleBox, batch_norm, eigvalsh, random_jets, random_q_elements

MapFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxDomain:
    lower: tuple
    upper: tuple
    margin: float = 0.0

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise InvalidParameter("box corners must be equal-length non-empty vectors")
        if not np.all(lo < hi):
            raise InvalidParameter(f"box needs lower < upper componentwise, got {self.lower}, {self.upper}")
        if self.margin < 0 or np.any(2 * self.margin >= hi - lo):
            raise InvalidParameter(f"margin {self.margin} must be >= 0 and leave a non-empty inner box")
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    @classmethod
    def unit(cls, d: int, margin: float = 0.0) -> "BoxDomain":
        return cls((0.0,) * d, (1.0,) * d, margin)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def inner(self) -> "BoxDomain":
        """The shrunken box ``Ω'`` obtained by removing the margin."""
        return BoxDomain(tuple(self.lo + self.margin), tuple(self.hi - self.margin))

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def contains_box(self, other: "BoxDomain") -> bool:
        return bool(np.all(other.lo >= self.lo - 1e-12) and np.all(other.hi <= self.hi + 1e-12))

    def corners(self) -> np.ndarray:
        d = self.dim
        bits = (np.arange(2 ** d)[:, None] >> np.arange(d)) & 1
        return np.where(bits == 1, self.hi, self.lo)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Corner points followed by a scrambled Sobol sequence, ``n`` in total."""
        corners = self.corners()
        k = max(n - corners.shape[0], 0)
        pts = [corners[:n]]
        if k:
            sob = qmc.Sobol(self.dim, scramble=True, seed=seed)
            m = int(math.ceil(math.log2(max(k, 2))))
            u = sob.random_base2(m)[:k]
            pts.append(self.lo + u * (self.hi - self.lo))
        return np.concatenate(pts)

    def to_json(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "margin": self.margin}


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JetMap:
    """``x ↦ Θ(x)`` through a batched margin ``g(x, r, A)``.

    ``x`` has shape ``(n, d)``.  When ``spectral`` is given it computes the
    same margin from ``(x, r, eigenvalues)``; evaluation then needs one
    eigen-decomposition per jet regardless of how many translates are tried.
    """

    domain: BoxDomain
    dim: int
    margin_fn: MapFn
    label: str = "map"
    spectral: MapFn | None = None
    boundary_tol: float = DEFAULT_TOL
    improper: bool = False

    def _x(self, x, n):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = np.broadcast_to(x, (n, x.shape[0]))
        if x.shape[-1] != self.domain.dim:
            raise InvalidParameter(f"point dimension {x.shape[-1]} does not match domain dimension {self.domain.dim}")
        return x

    def margin(self, x, r, a) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        a = np.asarray(a, dtype=float)
        if a.ndim == 2:
            a = a[None]
        x = self._x(x, r.shape[0])
        if self.spectral is not None:
            return np.asarray(self.spectral(x, r, eigvalsh(a)), dtype=float)
        return np.asarray(self.margin_fn(x, r, a), dtype=float)

    def margin_lam(self, x, r, lam, a=None) -> np.ndarray:
        """Margin from eigenvalues; falls back to matrices for non-spectral maps."""
        x = self._x(x, r.shape[0])
        if self.spectral is not None:
            return np.asarray(self.spectral(x, r, lam), dtype=float)
        if a is None:
            raise InvalidParameter("non-spectral map needs the matrices")
        return np.asarray(self.margin_fn(x, r, a), dtype=float)

    def fiber(self, x) -> ConstraintSet:
        x = np.asarray(x, dtype=float).reshape(-1)
        label = f"{self.label}@{np.array2string(x, precision=4)}"
        if self.spectral is not None:
            sp = self.spectral
            return spectral_set(self.dim, lambda r, lam: sp(np.broadcast_to(x, (r.shape[0], x.size)), r, lam),
                                label, True, self.boundary_tol, self.improper)
        mf = self.margin_fn
        return ConstraintSet(self.dim, lambda r, a: mf(np.broadcast_to(x, (r.shape[0], x.size)), r, a),
                             self.boundary_tol, True, self.improper, label)


def constant_map(s: ConstraintSet, domain: BoxDomain) -> JetMap:
    sp = None
    if s.spectral is not None:
        f = s.spectral
        sp = lambda x, r, lam: f(r, lam)  # noqa: E731
    g = s.defining_fn
    return JetMap(domain, s.dim, lambda x, r, a: g(r, a), f"const({s.label})", sp,
                  s.boundary_tol, s.improper)


def dual_map(m: JetMap) -> JetMap:
    label = m.label[:-1] if m.label.endswith("~") else m.label + "~"
    sp = None
    if m.spectral is not None:
        f = m.spectral
        sp = lambda x, r, lam: -f(x, -r, -lam[..., ::-1])  # noqa: E731
    g = m.margin_fn
    return JetMap(m.domain, m.dim, lambda x, r, a: -g(x, -r, -a), label, sp, m.boundary_tol, False)


def truncate_map(m: JetMap, M: float, x_samples=None) -> JetMap:
    """``Θ_M(x) = {(r, A) : (ψ_M(r), A) ∈ Θ(x)}`` with ``ψ_M`` the clamp.

    ``M`` must dominate the bounded-harmonic level ``τ`` of ``m``, otherwise
    ``Θ_M`` can lose properness; this is checked on ``x_samples`` (the
    domain corners and a Sobol set by default).
    """
    if not M > 0:
        raise InvalidParameter("truncation level M must be positive")
    if x_samples is None:
        x_samples = m.domain.sample(64, seed=0)
    tau = find_tau(m, x_samples)
    if not tau["found"] or tau["tau"] > M:
        raise InvalidParameter(
            f"truncation level M={M} is below the bounded-harmonic level tau={tau['tau']}"
        )
    g = m.margin_fn
    sp = None
    if m.spectral is not None:
        f = m.spectral
        sp = lambda x, r, lam: f(x, np.clip(r, -M, M), lam)  # noqa: E731
    return JetMap(m.domain, m.dim, lambda x, r, a: g(x, np.clip(r, -M, M), a),
                  f"{m.label}|M={M:g}", sp, m.boundary_tol, m.improper)


# ---------------------------------------------------------------------------
# bounded harmonics
# ---------------------------------------------------------------------------

def find_tau(m: JetMap, x_samples, tau_max: float = 1e8, rel_res: float = 1e-6) -> dict:
    """Smallest ``τ`` with ``(-τ, τI)`` in ``Θ(x)`` and ``Θ̃(x)`` at every sample.

    Along ``τ ↦ (-τ, τI)`` membership is monotone, so the answer is found by
    bracketing and bisection.  The associated bounded harmonic is
    ``φ(x) = -τ + (τ/2)|x|²``.
    """
    xs = np.atleast_2d(np.asarray(x_samples, dtype=float))
    if xs.shape[0] == 0:
        raise InvalidParameter("find_tau needs at least one sample point")
    if not np.all(m.domain.contains(xs)):
        raise InvalidParameter("find_tau sample points must lie in the domain")
    dm = dual_map(m)
    n = m.dim
    k = xs.shape[0]

    def ok(tau: float) -> bool:
        r = np.full(k, -tau)
        a = np.broadcast_to(tau * np.eye(n), (k, n, n))
        band = m.boundary_tol * (1 + tau)
        return bool(np.all(m.margin(xs, r, a) >= -band) and np.all(dm.margin(xs, r, a) >= -band))

    if ok(0.0):
        return {"found": True, "tau": 0.0}
    hi = 1e-3
    while not ok(hi):
        hi *= 2.0
        if hi > tau_max:
            return {"found": False, "tau": math.inf}
    lo = hi / 2 if hi > 1e-3 else 0.0
    while hi - lo > rel_res * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return {"found": True, "tau": hi}


# ---------------------------------------------------------------------------
# jet sampling on fibers
# ---------------------------------------------------------------------------

def map_ray_root(m: JetMap, x, r, a, dr: float = -1.0, da: float = 1.0, lam=None,
                 t_max: float = 1e8) -> np.ndarray:
    """Per-jet root of ``t ↦ g(x; r + t dr, A + t da I)``; see :func:`constraint.solve_ray`."""
    n = m.dim
    eye = np.eye(n)
    if m.spectral is not None:
        lam = eigvalsh(a) if lam is None else lam
        sp = m.spectral

        def at(t, idx):
            return np.asarray(sp(x[idx], r[idx] + t * dr, lam[idx] + (t * da)[:, None]), dtype=float)
    else:
        g = m.margin_fn

        def at(t, idx):
            return np.asarray(g(x[idx], r[idx] + t * dr, a[idx] + (t * da)[:, None, None] * eye), dtype=float)

    return solve_ray(at, r.shape[0], t_max=t_max)


@dataclass
class FiberJets:
    """Jets attached to sample points: ``x[xi[k]]`` carries ``(r[k], a[k])``."""

    xi: np.ndarray
    r: np.ndarray
    a: np.ndarray
    lam: np.ndarray

    def __len__(self):
        return self.r.shape[0]

    def take(self, mask) -> "FiberJets":
        return FiberJets(self.xi[mask], self.r[mask], self.a[mask], self.lam[mask])


def band_scales(box: SampleBox, bands: int) -> list:
    return [box.eig_scale * 10.0 ** (-3 * k) for k in range(bands)]


def fiber_boundary_jets(m: JetMap, xs: np.ndarray, box: SampleBox, per_x: int,
                        rng: np.random.Generator, dr: float = -1.0, da: float = 1.0,
                        bands: int = 3, interior_fraction: float = 0.0) -> FiberJets:
    """Boundary points of ``Θ(x)`` for every ``x`` in ``xs``.

    Random jets from several eigenvalue scale bands are pushed along
    ``(dr, da I)`` onto the zero level of the margin; the origin jet is
    pushed as well (the apex probe).  Optionally a fraction is moved inward
    by random elements of Q.
    """
    n = m.dim
    k = xs.shape[0]
    per_x = max(per_x, 1)
    scales = band_scales(box, bands)
    rs, as_ = [], []
    for b in range(per_x - 1):
        sub = SampleBox(box.r_range, scales[b % len(scales)], box.seed, k)
        jets = random_jets(sub, n, rng)
        rs.append(jets.r)
        as_.append(jets.a)
    rs.append(np.zeros(k))
    as_.append(np.zeros((k, n, n)))
    r = np.concatenate(rs)
    a = np.concatenate(as_)
    xi = np.tile(np.arange(k), per_x)
    lam = eigvalsh(a)
    t = map_ray_root(m, xs[xi], r, a, dr, da, lam)
    ok = ~np.isnan(t)
    r = r[ok] + dr * t[ok]
    lam = lam[ok] + (da * t[ok])[:, None]
    a = a[ok] + (da * t[ok])[:, None, None] * np.eye(n)
    xi = xi[ok]
    if interior_fraction > 0 and r.size:
        move = rng.random(r.size) < interior_fraction
        qs, qp = random_q_elements(rng, n, r.size, scale=0.1 * box.eig_scale)
        if dr == 0.0:
            qs = np.zeros_like(qs)
        r = np.where(move, r + qs, r)
        a = np.where(move[:, None, None], a + qp, a)
        lam = np.where(move[:, None], eigvalsh(a), lam)
    return FiberJets(xi, r, a, lam)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class ContinuityCertificate:
    map_label: str
    eta_grid: list
    delta_for_eta: list
    samples: dict
    verdict: str
    witness: dict | None = None
    table: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_json(self) -> dict:
        return {
            "map_label": self.map_label,
            "eta_grid": [float(e) for e in self.eta_grid],
            "delta_for_eta": [None if d is None else float(d) for d in self.delta_for_eta],
            "samples": self.samples,
            "verdict": self.verdict,
            "witness": self.witness,
            "table": self.table,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _ball(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    u = rng.standard_normal((k, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = rng.random(k) ** (1.0 / d)
    return u * rad[:, None]


def delta_search(label: str, etas, region: BoxDomain, seed: int, xs: np.ndarray,
                 jets: FiberJets, violations, max_halvings: int = 20,
                 slack_fn=None) -> ContinuityCertificate:
    """Halving search for ``δ(η)`` shared by all continuity checks.

    ``violations(x, y, jets, eta)`` returns ``(bad_mask, extra)`` over the
    jets, where ``x`` and ``y`` are already expanded per jet.  ``slack_fn``,
    if given, maps ``(x, y, eta, delta)`` per pair to a slack that must be
    ``>= 0`` at the tried ``δ``.
    The first (lowest-index) violating jet at the smallest tried ``δ`` is
    the witness.
    """
    etas = [float(e) for e in etas]
    if not etas or min(etas) <= 0:
        raise InvalidParameter("eta grid must be a non-empty list of positive reals")
    d = region.dim
    samples = {"x_points": int(xs.shape[0]), "jets": int(len(jets)), "max_halvings": int(max_halvings)}
    if len(jets) == 0:
        return ContinuityCertificate(label, etas, [None] * len(etas), samples, "inconclusive",
                                     {"reason": "no fiber members found in the sample box"})
    deltas = []
    table = []
    witness = None
    child = np.random.SeedSequence(seed).spawn(len(etas))
    for e_i, eta in enumerate(etas):
        rng = np.random.default_rng(child[e_i])
        delta = region.diameter
        passed = None
        last = None
        for step in range(max_halvings + 1):
            ys = np.clip(xs + delta * _ball(rng, xs.shape[0], d), region.lo, region.hi)
            dist = np.linalg.norm(ys - xs, axis=1)
            ys = np.where((dist < delta)[:, None], ys, xs)
            bad, extra = violations(xs[jets.xi], ys[jets.xi], jets, eta)
            slack_bad = np.zeros(xs.shape[0], dtype=bool)
            slack = None
            if slack_fn is not None:
                slack = slack_fn(xs, ys, eta, delta)
                slack_bad = slack < 0
            if not bad.any() and not slack_bad.any():
                passed = delta
                row = {"eta": eta, "delta": delta, "halvings": step}
                if slack is not None:
                    row["min_slack"] = float(slack.min())
                if extra:
                    row.update(extra)
                table.append(row)
                break
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                i = int(jets.xi[k])
                last = {
                    "kind": "jet",
                    "eta": eta,
                    "delta": delta,
                    "x": xs[i].tolist(),
                    "y": ys[i].tolist(),
                    "jet": {"r": float(jets.r[k]), "A": jets.a[k].tolist()},
                }
            else:
                i = int(np.flatnonzero(slack_bad)[0])
                last = {"kind": "slack", "eta": eta, "delta": delta,
                        "x": xs[i].tolist(), "y": ys[i].tolist(), "slack": float(slack[i])}
            sep = float(np.linalg.norm(np.asarray(last["y"]) - np.asarray(last["x"])))
            delta = min(delta / 2.0, sep) if sep > 0 else delta / 2.0
        deltas.append(passed)
        if passed is None:
            witness = last
            break
    if witness is not None:
        deltas += [None] * (len(etas) - len(deltas))
        return ContinuityCertificate(label, etas, deltas, samples, "refuted", witness, table)
    return ContinuityCertificate(label, etas, deltas, samples, "certified", None, table)


def _check_region(m: JetMap, region: BoxDomain | None) -> BoxDomain:
    if region is None:
        return m.domain.inner() if m.domain.margin > 0 else m.domain
    if region.dim != m.domain.dim or not m.domain.contains_box(region):
        raise InvalidParameter("region must lie inside the map's domain")
    return region


def _translation_violations(m: JetMap, dr_of_eta, da_of_eta):
    def violations(x, y, jets, eta):
        dr, da = dr_of_eta(eta), da_of_eta(eta)
        r2 = jets.r + dr
        lam2 = jets.lam + da
        a2 = jets.a + da * np.eye(m.dim) if m.spectral is None else None
        g = m.margin_lam(y, r2, lam2, a2)
        norm = np.maximum(np.abs(r2), np.max(np.abs(lam2), axis=-1))
        return g < -m.boundary_tol * (1.0 + norm), {}
    return violations


def check_translation_continuity(m: JetMap, etas, region: BoxDomain | None = None,
                                 box: SampleBox | None = None, n_points: int = 2000,
                                 jets_per_x: int = 50, max_halvings: int = 20,
                                 bands: int = 3) -> ContinuityCertificate:
    """Certify ``Θ(x) + (-η, ηI) ⊂ Θ(y)`` for ``|x - y| < δ(η)`` by sampling.

    Jets are boundary points of ``Θ(x)``: if a boundary jet survives the
    translation then so does every interior jet above it.
    """
    region = _check_region(m, region)
    box = box or SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    jets = fiber_boundary_jets(m, xs, box, jets_per_x, rng, bands=bands)
    viol = _translation_violations(m, lambda e: -e, lambda e: e)
    return delta_search(m.label, etas, region, box.seed + 1, xs, jets, viol, max_halvings)


def validate_delta_table(m: JetMap, etas, deltas, region: BoxDomain | None = None,
                         box: SampleBox | None = None, n_points: int = 500,
                         jets_per_x: int = 20, bands: int = 3) -> dict:
    """Spot-check a proposed ``δ(η)`` table against sampled pairs and boundary jets."""
    region = _check_region(m, region)
    box = box or SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    jets = fiber_boundary_jets(m, xs, box, jets_per_x, rng, bands=bands)
    viol = _translation_violations(m, lambda e: -e, lambda e: e)
    count = 0
    witness = None
    for eta, delta in zip(etas, deltas):
        ys = np.clip(xs + delta * _ball(rng, xs.shape[0], region.dim), region.lo, region.hi)
        dist = np.linalg.norm(ys - xs, axis=1)
        ys = np.where((dist < delta)[:, None], ys, xs)
        bad, _ = viol(xs[jets.xi], ys[jets.xi], jets, float(eta))
        count += int(bad.sum())
        if bad.any() and witness is None:
            k = int(np.flatnonzero(bad)[0])
            i = int(jets.xi[k])
            witness = {"eta": float(eta), "delta": float(delta), "x": xs[i].tolist(), "y": ys[i].tolist(),
                       "jet": {"r": float(jets.r[k]), "A": jets.a[k].tolist()}}
    return {"violations": count, "pairs": int(n_points) * len(etas), "jets": int(len(jets)), "witness": witness}


def check_relaxed_continuity(m: JetMap, R: float, etas, region: BoxDomain | None = None,
                             box: SampleBox | None = None, n_points: int = 2000,
                             jets_per_x: int = 50, max_halvings: int = 20,
                             bands: int = 3) -> ContinuityCertificate:
    """Certify ``Θ(x) ∩ ([-R, R] × S(N)) + (0, ηI) ⊂ Θ(y)`` by sampling."""
    if not R > 0:
        raise InvalidParameter("R must be positive")
    region = _check_region(m, region)
    box = box or SampleBox(eig_scale=10.0)
    box = SampleBox((-R, R), box.eig_scale, box.seed, box.count)
    rng = np.random.default_rng(box.seed)
    xs = region.sample(n_points, box.seed)
    jets = fiber_boundary_jets(m, xs, box, jets_per_x, rng, dr=0.0, da=1.0, bands=bands)
    jets = jets.take(np.abs(jets.r) <= R)
    viol = _translation_violations(m, lambda e: 0.0, lambda e: e)
    cert = delta_search(f"{m.label}|R={R:g}", etas, region, box.seed + 1, xs, jets, viol, max_halvings)
    return cert


def replay_witness(m: JetMap, witness: dict, translate=None) -> dict:
    """Re-evaluate a stored witness: member at ``x`` and translate Outside at ``y``."""
    eta = witness["eta"]
    dr, da = translate if translate is not None else (-eta, eta)
    r = np.array([witness["jet"]["r"]])
    a = np.array([witness["jet"]["A"]])
    gx = float(m.margin(np.array(witness["x"]), r, a)[0])
    gy = float(m.margin(np.array(witness["y"]), r + dr, a + da * np.eye(m.dim))[0])
    norm = float(batch_norm(r + dr, a + da * np.eye(m.dim))[0])
    tol = m.boundary_tol * (1 + norm)
    return {"margin_x": gx, "margin_y": gy, "member_at_x": gx >= -tol, "outside_at_y": gy < -tol}


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

def _windowed_members(s: ConstraintSet, R: float, box: SampleBox, rng) -> tuple:
    mem = sample_members(s, box, rng)
    n = s.dim
    r = np.concatenate([mem.r, [0.0]])
    a = np.concatenate([mem.a, np.zeros((1, n, n))])
    # the apex probe may not be a member; project it
    t0 = q_distance(s, r[-1:], a[-1:])[0]
    if np.isfinite(t0):
        r[-1] -= t0
        a[-1] += t0 * np.eye(n)
    g = s.margin(r, a)
    keep = (g >= 0) & (batch_norm(r, a) <= R)
    return r[keep], a[keep]


def windowed_hausdorff(s1: ConstraintSet, s2: ConstraintSet, R: float, box: SampleBox) -> dict:
    """Two-sided Hausdorff estimate between ``s1`` and ``s2`` seen through a window.

    Members of each set with jet norm at most ``R`` are sampled and their
    distance to the other set is computed exactly along the monotone ray
    (exact for Q-monotone sets).  The maximum is a lower bound for the
    Hausdorff distance of the windowed sets.  An empty window gives ``inf``.
    """
    if not R > 0:
        raise InvalidParameter("window radius must be positive")
    rng = box.rng()
    r1, a1 = _windowed_members(s1, R, box, rng)
    r2, a2 = _windowed_members(s2, R, box, rng)
    if r1.size == 0 or r2.size == 0:
        return {"estimate": math.inf, "samples": [int(r1.size), int(r2.size)], "empty": True}
    d12 = q_distance(s2, r1, a1)
    d21 = q_distance(s1, r2, a2)
    est = float(max(d12.max(), d21.max()))
    return {"estimate": est, "samples": [int(r1.size), int(r2.size)], "empty": False}
