"""Single-fiber set algebra on gradient-free jet space.

A set is carried by a batched defining function ``g(r, A)`` with the set
being ``{g >= 0}``.  Batched means ``r`` has shape ``(n,)`` and ``A`` has shape
``(n, N, N)``; the function returns shape ``(n,)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError, InvalidParameter
from .jetcore import (
    Jet,
    JetBatch,
    SampleBox,
    batch_norm,
    eigvalsh,
    random_jets,
    random_q_elements,
)

DEFAULT_TOL = 1e-9
DefiningFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
SpectralFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Verdict(enum.IntEnum):
    OUTSIDE = -1
    BOUNDARY = 0
    INSIDE = 1


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: Verdict
    margin: float


@dataclass
class Report:
    """Outcome of a sampled check; ``witness`` is replayable when present."""

    name: str
    passed: bool
    samples: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "samples": int(self.samples),
            "witness": self.witness,
            "details": self.details,
        }


@dataclass(frozen=True)
class ConstraintSet:
    dim: int
    defining_fn: DefiningFn
    boundary_tol: float = DEFAULT_TOL
    q_monotone_declared: bool = True
    improper: bool = False
    label: str = "set"
    # optional form g(r, eigenvalues) for orthogonally invariant sets
    spectral: SpectralFn | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameter("set dimension must be positive")
        if not self.boundary_tol > 0:
            raise InvalidParameter("boundary_tol must be positive")

    def margin(self, r, a) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        a = np.asarray(a, dtype=float)
        if a.ndim == 2:
            a = a[None]
        if a.shape[-1] != self.dim:
            raise InvalidParameter(f"jet dimension {a.shape[-1]} does not match set dimension {self.dim}")
        g = np.asarray(self.defining_fn(r, a), dtype=float)
        g = np.broadcast_to(g, r.shape)
        bad = ~np.isfinite(g)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise EvaluationError(
                f"defining function of {self.label!r} is not finite", Jet.of(r[i], a[i])
            )
        return g

    def verdicts(self, r, a, band: float | None = None) -> np.ndarray:
        band = self.boundary_tol if band is None else band
        g = self.margin(r, a)
        out = np.zeros(g.shape, dtype=int)
        out[g > band] = Verdict.INSIDE
        out[g < -band] = Verdict.OUTSIDE
        return out

    def member_mask(self, r, a, band: float | None = None) -> np.ndarray:
        """Inside-or-Boundary."""
        return self.verdicts(r, a, band) != Verdict.OUTSIDE

    def with_label(self, label: str) -> "ConstraintSet":
        return ConstraintSet(self.dim, self.defining_fn, self.boundary_tol,
                             self.q_monotone_declared, self.improper, label, self.spectral)


def spectral_set(n: int, sfn: SpectralFn, label: str = "set", q_monotone_declared: bool = True,
                 boundary_tol: float = DEFAULT_TOL, improper: bool = False) -> ConstraintSet:
    """Set whose defining function depends on ``A`` only through its spectrum."""

    def g(r, a):
        return sfn(r, eigvalsh(a))

    return ConstraintSet(n, g, boundary_tol, q_monotone_declared, improper, label, sfn)


def membership(s: ConstraintSet, j: Jet) -> MembershipVerdict:
    if j.dim != s.dim:
        raise InvalidParameter(f"jet dimension {j.dim} does not match set dimension {s.dim}")
    g = float(s.margin([j.r], j.a.to_array())[0])
    if g > s.boundary_tol:
        v = Verdict.INSIDE
    elif g < -s.boundary_tol:
        v = Verdict.OUTSIDE
    else:
        v = Verdict.BOUNDARY
    return MembershipVerdict(v, g)


def dual(s: ConstraintSet) -> ConstraintSet:
    """The Dirichlet dual, with defining function ``-g(-r, -A)``."""
    label = s.label[:-1] if s.label.endswith("~") else s.label + "~"
    if s.spectral is not None:
        sf = s.spectral

        def sf_dual(r, lam):
            # spectrum of -A is the reversed negation
            return -np.asarray(sf(-r, -lam[..., ::-1]), dtype=float)

        return spectral_set(s.dim, sf_dual, label, s.q_monotone_declared, s.boundary_tol)
    g = s.defining_fn

    def g_dual(r, a):
        return -np.asarray(g(-r, -a), dtype=float)

    return ConstraintSet(s.dim, g_dual, s.boundary_tol, s.q_monotone_declared, False, label)


def _g_q(r, lam):
    return np.minimum(-r, lam[..., 0])


def _g_qdual(r, lam):
    return np.maximum(-r, lam[..., -1])


def _g_p(r, lam):
    return lam[..., 0] + 0.0 * r


def _g_full(r, lam):
    return np.ones_like(r)


_CANONICAL = {"Q": _g_q, "Qdual": _g_qdual, "P_cone": _g_p, "full_J": _g_full}


def canonical(kind: str, n: int, boundary_tol: float = DEFAULT_TOL) -> ConstraintSet:
    if kind not in _CANONICAL:
        raise InvalidParameter(f"unknown canonical set {kind!r}; expected one of {sorted(_CANONICAL)}")
    if n < 1:
        raise InvalidParameter("dimension must be positive")
    return spectral_set(n, _CANONICAL[kind], kind, True, boundary_tol, improper=kind == "full_J")


def from_function(n: int, fn: DefiningFn, label: str = "set", q_monotone_declared: bool = False,
                  boundary_tol: float = DEFAULT_TOL) -> ConstraintSet:
    return ConstraintSet(n, fn, boundary_tol, q_monotone_declared, False, label)


def enlarge(s: ConstraintSet, eps: float) -> ConstraintSet:
    """``{j : j + (-eps, eps I) in s}``, a superset of ``s`` within distance ``eps``."""
    label = f"{s.label}+{eps:g}"
    if s.spectral is not None:
        sf = s.spectral
        return spectral_set(s.dim, lambda r, lam: sf(r - eps, lam + eps), label,
                            s.q_monotone_declared, s.boundary_tol, s.improper)
    g = s.defining_fn
    n = s.dim

    def g_eps(r, a):
        return g(r - eps, a + eps * np.eye(n))

    return ConstraintSet(n, g_eps, s.boundary_tol, s.q_monotone_declared, s.improper, label)


# ---------------------------------------------------------------------------
# ray searches
# ---------------------------------------------------------------------------

def ray_root(fn, r, a, dr: float = -1.0, da: float = 1.0,
             t_max: float = 1e8, t0: float = 1e-3, iters: int = 200):
    """Solve ``fn(r + t dr, A + t da I) = 0`` for ``t`` along a monotone ray.

    ``fn`` is assumed nondecreasing in ``t`` (true along ``(-1, I)`` for any
    Q-monotone set).  Returns ``t`` with NaN where no sign change was found
    inside ``|t| <= t_max``.  The returned point satisfies ``fn >= 0``.

    ``fn`` may be a :class:`ConstraintSet`; a spectral one is evaluated on a
    single eigen-decomposition, since the ray shifts every eigenvalue by
    ``t da``.
    """
    r = np.asarray(r, dtype=float)
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    eye = np.eye(n)

    if isinstance(fn, ConstraintSet) and fn.spectral is not None:
        sf = fn.spectral
        lam = eigvalsh(a)

        def at(t, idx):
            return np.asarray(sf(r[idx] + t * dr, lam[idx] + (t * da)[:, None]), dtype=float)
    else:
        gfn = fn.defining_fn if isinstance(fn, ConstraintSet) else fn

        def at(t, idx):
            return np.asarray(gfn(r[idx] + t * dr, a[idx] + t[:, None, None] * da * eye), dtype=float)

    return solve_ray(at, r.shape[0], t_max, t0, iters)


def solve_ray(at, m: int, t_max: float = 1e8, t0: float = 1e-3, iters: int = 200) -> np.ndarray:
    """Batched root of a nondecreasing scalar function of ``t``.

    ``at(t, idx)`` evaluates the function for the batch members ``idx`` at
    parameters ``t``.  Returns the smallest bisection point with value
    ``>= 0`` (NaN where no sign change exists inside ``|t| <= t_max``).
    """
    g0 = at(np.zeros(m), np.arange(m))
    lo = np.zeros(m)
    hi = np.zeros(m)
    found = g0 == 0

    # bracket with g(lo) < 0 <= g(hi); the previous probe is the other end
    step = np.full(m, t0)
    prev = np.zeros(m)
    neg = g0 < 0
    while True:
        idx = np.flatnonzero(~found & (step <= t_max))
        if idx.size == 0:
            break
        t = np.where(neg[idx], step[idx], -step[idx])
        g = at(t, idx)
        hit_up = neg[idx] & (g >= 0)
        hit_dn = ~neg[idx] & (g < 0)
        hi[idx[hit_up]] = t[hit_up]
        lo[idx[hit_up]] = prev[idx[hit_up]]
        lo[idx[hit_dn]] = t[hit_dn]
        hi[idx[hit_dn]] = prev[idx[hit_dn]]
        found[idx[hit_up | hit_dn]] = True
        prev[idx] = t
        step[idx] *= 2.0

    out = np.full(m, np.nan)
    done = found & (g0 == 0)
    out[done] = 0.0
    idx = np.flatnonzero(found & ~done)
    lo_i, hi_i = lo[idx], hi[idx]
    for _ in range(iters):
        if idx.size == 0:
            break
        mid = 0.5 * (lo_i + hi_i)
        stuck = (mid == lo_i) | (mid == hi_i)
        if stuck.all():
            break
        g = at(mid, idx)
        up = g >= 0
        hi_i = np.where(up, mid, hi_i)
        lo_i = np.where(up, lo_i, mid)
    out[idx] = hi_i
    return out


def q_distance(s: ConstraintSet, r, a, t_max: float = 1e8) -> np.ndarray:
    """Jet-norm distance from each jet to a Q-monotone set ``s``.

    For such sets the nearest direction is the monotone ray ``(-1, I)``, so
    the distance is the smallest ``t >= 0`` with ``j + t(-1, I)`` in ``s``
    (``+inf`` if none is found below ``t_max``).
    """
    t = ray_root(s, r, a, t_max=t_max)
    g0 = s.margin(r, a)
    t = np.where(g0 >= 0, 0.0, t)
    return np.where(np.isnan(t), np.inf, np.maximum(t, 0.0))


def interior_probe(s: ConstraintSet, r, a, eps: float = 1e-7) -> np.ndarray:
    """True where ``j`` is (numerically) an interior point of ``s``.

    For a Q-monotone set, ``j`` is interior exactly when some small push
    ``j + eps(1, -I)`` against the monotone direction still belongs to ``s``.
    Unlike ``g > tol`` this is correct for degenerate defining functions.
    """
    r = np.asarray(r, dtype=float)
    a = np.asarray(a, dtype=float)
    scale = eps * (1.0 + batch_norm(r, a))
    n = a.shape[-1]
    g = s.margin(r + scale, a - scale[:, None, None] * np.eye(n))
    return g >= 0


# ---------------------------------------------------------------------------
# member sampling
# ---------------------------------------------------------------------------

def sample_members(s: ConstraintSet, box: SampleBox, rng: np.random.Generator | None = None,
                   interior_fraction: float = 0.5) -> JetBatch:
    """Jets of ``s``: boundary projections of random jets plus Q-translates.

    Random jets are pushed along ``(-1, I)`` onto the zero level of ``g``;
    a fraction of them is then moved inward by random elements of Q.  Random
    jets that are already members are kept as well.
    """
    rng = box.rng() if rng is None else rng
    jets = random_jets(box, s.dim, rng)
    r, a = jets.r, jets.a
    t = ray_root(s, r, a)
    ok = ~np.isnan(t)
    n = s.dim
    br = r[ok] - t[ok]
    ba = a[ok] + t[ok][:, None, None] * np.eye(n)
    if br.size:
        keep = s.member_mask(br, ba)
        br, ba = br[keep], ba[keep]
    m = br.shape[0]
    if m:
        k = rng.random(m) < interior_fraction
        qs, qp = random_q_elements(rng, n, m, scale=box.eig_scale * 0.1)
        br = np.where(k, br + qs, br)
        ba = np.where(k[:, None, None], ba + qp, ba)
    own = s.member_mask(r, a)
    r_all = np.concatenate([br, r[own]])
    a_all = np.concatenate([ba, a[own]]) if r_all.size else np.zeros((0, n, n))
    return JetBatch(r_all, a_all)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _jet_dict(r, a) -> dict:
    return {"r": float(r), "A": np.asarray(a).tolist()}


def check_q_monotone(s: ConstraintSet, box: SampleBox) -> Report:
    """Sampled test of ``s + Q ⊂ s``.

    Deterministic probes come first (the origin jet and the jets on the
    sampled boundary, translated by ``(-1, 0)``, ``(0, I)``, ``(-1, I)``),
    then random members with random translates.  The first violation in that
    order is reported.
    """
    n = s.dim
    rng = box.rng()
    eye = np.eye(n)
    fixed_s = np.array([-1.0, 0.0, -1.0])
    fixed_p = np.array([np.zeros((n, n)), eye, eye])
    band = 10 * s.boundary_tol

    cand_r = [np.zeros(1)]
    cand_a = [np.zeros((1, n, n))]
    mem = sample_members(s, box, rng)
    cand_r.append(mem.r)
    cand_a.append(mem.a)
    r = np.concatenate(cand_r)
    a = np.concatenate(cand_a)
    keep = s.member_mask(r, a)
    r, a = r[keep], a[keep]
    m = r.shape[0]
    checked = 0
    if m == 0:
        return Report("q_monotone", True, 0, None, {"note": "no members found in sample box"})

    scale = np.maximum(1.0, batch_norm(r, a))
    for k in range(3):
        tr = r + fixed_s[k] * scale
        ta = a + scale[:, None, None] * fixed_p[k]
        bad = s.verdicts(tr, ta, band) == Verdict.OUTSIDE
        checked += m
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            return Report("q_monotone", False, checked, {
                "jet": _jet_dict(r[i], a[i]),
                "translate": _jet_dict(fixed_s[k] * scale[i], scale[i] * fixed_p[k]),
            })

    qs, qp = random_q_elements(rng, n, m, scale=box.eig_scale)
    tr, ta = r + qs, a + qp
    bad = s.verdicts(tr, ta, band * (1 + batch_norm(tr, ta))) == Verdict.OUTSIDE
    checked += m
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return Report("q_monotone", False, checked,
                      {"jet": _jet_dict(r[i], a[i]), "translate": _jet_dict(qs[i], qp[i])})
    return Report("q_monotone", True, checked)


def check_duality_identities(s: ConstraintSet, box: SampleBox) -> Report:
    """Sum-of-duals, boundary identity and double duality on samples."""
    n = s.dim
    rng = box.rng()
    ds = dual(s)
    qd = canonical("Qdual", n)
    band = 10 * s.boundary_tol
    details = {}
    witness = None

    m1 = sample_members(s, box, rng)
    m2 = sample_members(ds, box, rng)
    k = min(len(m1), len(m2))
    sr, sa = m1.r[:k] + m2.r[:k], m1.a[:k] + m2.a[:k]
    rel = band * (1.0 + batch_norm(m1.r[:k], m1.a[:k]) + batch_norm(m2.r[:k], m2.a[:k]))
    sum_bad = qd.margin(sr, sa) < -rel
    details["sum_of_duals_pairs"] = int(k)
    details["sum_of_duals_violations"] = int(sum_bad.sum())
    if sum_bad.any() and witness is None:
        i = int(np.flatnonzero(sum_bad)[0])
        witness = {"identity": "sum_of_duals", "jet": _jet_dict(m1.r[i], m1.a[i]),
                   "dual_jet": _jet_dict(m2.r[i], m2.a[i])}

    jets = random_jets(box, n, rng)
    r = np.concatenate([jets.r, m1.r])
    a = np.concatenate([jets.a, m1.a])
    g = s.margin(r, a)
    on_bd = np.abs(g) <= band
    rhs = (g >= -band) & (ds.margin(-r, -a) >= -band)
    bd_bad = on_bd != rhs
    details["boundary_samples"] = int(r.shape[0])
    details["boundary_violations"] = int(bd_bad.sum())
    if bd_bad.any() and witness is None:
        i = int(np.flatnonzero(bd_bad)[0])
        witness = {"identity": "boundary", "jet": _jet_dict(r[i], a[i])}

    dd = dual(ds)
    away = np.abs(g) > band
    v1 = s.verdicts(r[away], a[away])
    v2 = dd.verdicts(r[away], a[away])
    dd_bad = v1 != v2
    details["double_dual_samples"] = int(away.sum())
    details["double_dual_violations"] = int(dd_bad.sum())
    if dd_bad.any() and witness is None:
        i = int(np.flatnonzero(dd_bad)[0])
        witness = {"identity": "double_dual", "jet": _jet_dict(r[away][i], a[away][i])}

    passed = not (sum_bad.any() or bd_bad.any() or dd_bad.any())
    return Report("duality_identities", passed, int(k + r.shape[0]), witness, details)
