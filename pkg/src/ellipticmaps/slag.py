"""Phase analysis for the special Lagrangian map ``Θ(x) = {G(A) >= h(x)}``.

``G(A) = Σ arctan λ_i(A)`` takes values in ``(-Nπ/2, Nπ/2)``.  The special
values ``θ_k = (N - 2k)π/2`` for ``k = 1..N-1`` split that range into the
open phase intervals ``I_k = (θ_k, θ_{k-1})``, ``k = 1..N`` (with
``θ_0 = Nπ/2`` and ``θ_N = -Nπ/2``).  A phase ``h`` confined to one interval
gives a continuous map; a phase reaching a special value does not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .elliptic_map import BoxDomain, ContinuityCertificate, JetMap, validate_delta_table
from .errors import ConvergenceDefect, InvalidParameter
from .fieldlab import GridFunction
from .jetcore import SampleBox, SymMat, eigvalsh
from .operators import CoefficientField


def G_eval(a) -> float | np.ndarray:
    """``Σ arctan λ_i`` of a symmetric matrix (or a stack of them)."""
    if isinstance(a, SymMat):
        a = a.to_array()
    a = np.asarray(a, dtype=float)
    return np.arctan(eigvalsh(a)).sum(axis=-1)


@dataclass(frozen=True)
class PhasePartition:
    dim: int

    @property
    def special_values(self) -> list:
        """``θ_1 > θ_2 > ... > θ_{N-1}``."""
        return [(self.dim - 2 * k) * math.pi / 2 for k in range(1, self.dim)]

    def theta(self, k: int) -> float:
        return (self.dim - 2 * k) * math.pi / 2

    @property
    def intervals(self) -> list:
        """``I_k = (θ_k, θ_{k-1})`` for ``k = 1..N``."""
        return [(self.theta(k), self.theta(k - 1)) for k in range(1, self.dim + 1)]

    def interval_index(self, value: float) -> int | None:
        """``k`` with ``value`` in ``I_k``, or ``None`` on a special value or outside the range."""
        for k, (lo, hi) in enumerate(self.intervals, start=1):
            if lo < value < hi:
                return k
        return None

    def to_json(self) -> dict:
        return {"N": self.dim, "special_values": self.special_values,
                "intervals": [list(iv) for iv in self.intervals]}


def phase_partition(n: int) -> PhasePartition:
    if n < 1:
        raise InvalidParameter("dimension must be positive")
    return PhasePartition(n)


def eig_bound(sigma, n: int) -> float:
    """``C`` such that ``G(A)`` in ``Σ`` forces some ``|λ_i(A)| < C``.

    ``Σ = [lo, hi]`` must sit inside one phase interval; the bound is
    ``tan(π/2 - dist/N)`` with ``dist`` the gap from ``Σ`` to the interval
    endpoints.  Returns ``inf`` when ``Σ`` touches a special value.
    """
    lo, hi = (float(sigma), float(sigma)) if np.isscalar(sigma) else (float(sigma[0]), float(sigma[1]))
    if lo > hi:
        raise InvalidParameter("sigma must be an interval [lo, hi] with lo <= hi")
    part = phase_partition(n)
    k = part.interval_index(lo)
    if k is None or part.interval_index(hi) != k:
        return math.inf
    a, b = part.intervals[k - 1]
    dist = min(lo - a, b - hi)
    return math.tan(math.pi / 2 - dist / n)


@dataclass(frozen=True)
class FailureWitness:
    """``A = diag(-a I_k, b I_{N-k})`` with ``G(A) = base`` and small ``G(A + I) - base``."""

    n: int
    k: int
    a: float
    b: float
    base: float
    gap: float

    @property
    def matrix(self) -> np.ndarray:
        return np.diag([-self.a] * self.k + [self.b] * (self.n - self.k))

    def to_json(self) -> dict:
        A = self.matrix
        return {"N": self.n, "k": self.k, "a": self.a, "b": self.b, "A": A.tolist(),
                "G_A": float(G_eval(A)), "G_A_plus_I": float(G_eval(A + np.eye(self.n))),
                "base": self.base, "gap": self.gap}


def _block(n: int, k: int, base: float, a: float):
    arg = (base + k * math.atan(a)) / (n - k)
    if not -math.pi / 2 < arg < math.pi / 2:
        return None
    b = math.tan(arg)
    # atan(a) - atan(a - 1) and atan(b + 1) - atan(b) without cancellation
    gap = k * math.atan(1.0 / (1.0 + a * (a - 1.0))) + (n - k) * math.atan(1.0 / (1.0 + b * (b + 1.0)))
    return b, gap


def _witness(n: int, k: int, base: float, target_gap: float, a_max: float = 1e15) -> FailureWitness | None:
    a = 1.0
    while a <= a_max:
        got = _block(n, k, base, a)
        if got is not None and got[0] > 0 and got[1] < target_gap:
            return FailureWitness(n, k, a, got[0], base, got[1])
        a *= 2.0
    return None


def witness_at(n: int, k: int, a: float, base: float | None = None) -> FailureWitness:
    """The block jet for a given ``a``; ``b`` solves ``G(A) = base`` (default ``θ_k``)."""
    if not 1 <= k <= n - 1:
        raise InvalidParameter(f"k must lie in 1..{n - 1}")
    base = phase_partition(n).theta(k) if base is None else float(base)
    got = _block(n, k, base, float(a))
    if got is None:
        raise InvalidParameter(f"no b solves G(A) = {base:g} for a = {a:g}")
    return FailureWitness(n, k, float(a), got[0], base, got[1])


def failure_witness(n: int, k: int, target_gap: float) -> FailureWitness:
    """A jet on ``{G = θ_k}`` whose unit translate gains less than ``target_gap``.

    ``a`` doubles from 1; ``b`` is fixed by ``G(A) = θ_k``.  As ``a`` grows
    both blocks approach ``±π/2`` and the gain tends to zero.
    """
    if not 1 <= k <= n - 1:
        raise InvalidParameter(f"k must lie in 1..{n - 1}")
    if not target_gap > 0:
        raise InvalidParameter("target gap must be positive")
    w = _witness(n, k, phase_partition(n).theta(k), target_gap)
    if w is None:
        raise ConvergenceDefect(f"no witness with gap < {target_gap:g} before a exceeded 1e15")
    return w


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def _field(h, domain: BoxDomain | None) -> CoefficientField:
    if isinstance(h, CoefficientField):
        return h
    if isinstance(h, GridFunction):
        return CoefficientField(h.domain, h.values)
    if domain is None:
        raise InvalidParameter("an array phase needs a domain")
    return CoefficientField(domain, np.asarray(h, dtype=float))


def slag_map(h, n: int, domain: BoxDomain | None = None) -> JetMap:
    f = _field(h, domain)
    return JetMap(f.domain, n, None, f"slag(N={n})", lambda x, r, lam: np.arctan(lam).sum(axis=-1) - f(x))


def _neighbour_pairs(vals: np.ndarray):
    """Adjacent node pairs ``(p, q)`` along every axis, flattened."""
    for ax in range(vals.ndim):
        lo = [slice(None)] * vals.ndim
        hi = [slice(None)] * vals.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        idx = np.indices(vals.shape)
        yield idx[(slice(None),) + tuple(lo)].reshape(vals.ndim, -1).T, idx[(slice(None),) + tuple(hi)].reshape(vals.ndim, -1).T


def _crossing(f: CoefficientField, theta: float):
    """Nodes ``lo, hi`` adjacent with ``f(lo) <= θ <= f(hi)`` and ``f(lo) < f(hi)``.

    Prefers a strict upper side ``f(hi) > θ``.
    """
    vals = f.values
    fallback = None
    for p, q in _neighbour_pairs(vals):
        vp = vals[tuple(p.T)]
        vq = vals[tuple(q.T)]
        for a_idx, b_idx, va, vb in ((p, q, vp, vq), (q, p, vq, vp)):
            strict = (va <= theta) & (vb > theta)
            if strict.any():
                i = int(np.flatnonzero(strict)[0])
                return a_idx[i], b_idx[i], True
            weak = (va < theta) & (vb >= theta)
            if fallback is None and weak.any():
                i = int(np.flatnonzero(weak)[0])
                fallback = (a_idx[i], b_idx[i], False)
    return fallback


def _node_x(f: CoefficientField, node) -> np.ndarray:
    d = f.domain
    steps = (d.hi - d.lo) / (np.asarray(f.values.shape) - 1)
    return d.lo + np.asarray(node) * steps


def _refute(f: CoefficientField, n: int, k: int, sequence_len: int = 6) -> dict | None:
    part = phase_partition(n)
    theta = part.theta(k)
    found = _crossing(f, theta)
    if found is None:
        return None
    p, q, strict = found
    xp, xq = _node_x(f, p), _node_x(f, q)
    hp, hq = float(f.values[tuple(p)]), float(f.values[tuple(q)])
    # along the edge the interpolant is linear
    s0 = (theta - hp) / (hq - hp)
    x0 = xp + s0 * (xq - xp)
    seq = []
    if strict:
        # jet on the boundary of Θ(x0); its translate leaves Θ(y) with h(y) > θ
        for m in range(sequence_len):
            s = s0 + (1.0 - s0) * 2.0 ** (-m)
            y = xp + s * (xq - xp)
            hy = hp + s * (hq - hp)
            w = failure_witness(n, k, (hy - theta) / 2)
            seq.append({"x": x0.tolist(), "y": y.tolist(), "distance": float(np.linalg.norm(y - x0)),
                        "h_x": theta, "h_y": hy, "jet": {"r": 0.0, **w.to_json()}})
    else:
        # h only reaches θ from below: start at a point with h < θ, land at x0
        for m in range(sequence_len):
            s = s0 * (1.0 - 2.0 ** (-m - 1))
            y = xp + s * (xq - xp)
            hy = hp + s * (hq - hp)
            w = _witness(n, k, hy, (theta - hy) / 2)
            if w is None:
                continue
            seq.append({"x": y.tolist(), "y": x0.tolist(), "distance": float(np.linalg.norm(y - x0)),
                        "h_x": hy, "h_y": theta, "jet": {"r": 0.0, **w.to_json()}})
    if not seq:
        return None
    first = seq[0]
    return {"kind": "phase_crossing", "k": k, "theta_k": theta, "eta": 1.0,
            "x": first["x"], "y": first["y"], "jet": first["jet"], "sequence": seq}


def replay_slag_witness(witness: dict, n: int) -> bool:
    """Every entry: ``G(A) = h(x)`` (a member of ``Θ(x)``) and ``G(A + I) < h(y)``."""
    for item in witness["sequence"]:
        A = np.asarray(item["jet"]["A"], dtype=float)
        g0 = float(G_eval(A))
        g1 = float(G_eval(A + np.eye(n)))
        if abs(g0 - item["h_x"]) > 1e-9 * (1 + abs(g0)) or not g1 < item["h_y"]:
            return False
    return True


@dataclass
class SlagReport:
    certificate: ContinuityCertificate
    phase: dict

    def to_json(self) -> dict:
        return {"certificate": self.certificate.to_json(), "phase": self.phase}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def certify_slag_continuity(h, n: int, etas, domain: BoxDomain | None = None, box: SampleBox | None = None,
                            spot_points: int = 300, spot_jets: int = 20) -> SlagReport:
    """Constructive ``δ(η)`` table when ``h`` stays in one phase interval, a witness otherwise.

    With ``[min h, max h]`` inside ``I_k``, take ``ε`` as half the distance
    from ``max h`` to the upper endpoint, ``Σ = [min h, max h + ε]`` and
    ``C = eig_bound(Σ)``.  Any jet with ``G(A)`` in ``Σ`` has an eigenvalue
    below ``C`` in modulus, so translating by ``(-η, ηI)`` raises ``G`` by at
    least ``min(η, C)/(1 + 4C²)``; ``δ`` keeps ``|h(x) - h(y)|`` under that
    and under ``ε``.  The table is spot-checked by sampling.
    """
    etas = [float(e) for e in etas]
    if not etas or min(etas) <= 0:
        raise InvalidParameter("eta grid must be a non-empty list of positive reals")
    f = _field(h, domain)
    lo, hi = float(f.values.min()), float(f.values.max())
    if lo <= -n * math.pi / 2 or hi >= n * math.pi / 2:
        raise InvalidParameter("phase must lie in (-N pi/2, N pi/2)")
    part = phase_partition(n)
    m = slag_map(f, n)
    label = m.label
    region = f.domain
    phase = {**part.to_json(), "h_range": [lo, hi]}
    samples = {"x_points": spot_points, "jets": 0}

    if hi == lo:
        deltas = [region.diameter] * len(etas)
        phase.update({"constant": True})
        cert = ContinuityCertificate(label, etas, deltas, samples, "certified", None,
                                     [{"eta": e, "delta": region.diameter} for e in etas])
        return SlagReport(cert, phase)

    k_lo, k_hi = part.interval_index(lo), part.interval_index(hi)
    if k_lo is not None and k_lo == k_hi:
        k = k_lo
        upper = part.intervals[k - 1][1]
        eps = (upper - hi) / 2
        C = eig_bound((lo, hi + eps), n)
        lip = f.lipschitz
        table = []
        deltas = []
        for eta in etas:
            omega = min(eps, min(eta, C) / (1 + 4 * C * C))
            delta = region.diameter if lip == 0 else min(region.diameter, omega / lip)
            deltas.append(delta)
            table.append({"eta": eta, "delta": delta, "omega": omega})
        spot = validate_delta_table(m, etas, deltas, region, box, spot_points, spot_jets)
        samples.update({"jets": spot["jets"], "spot_violations": spot["violations"]})
        phase.update({"interval": k, "epsilon": eps, "sigma": [lo, hi + eps], "C": C, "lipschitz": lip})
        verdict = "certified" if spot["violations"] == 0 else "inconclusive"
        cert = ContinuityCertificate(label, etas, deltas, samples, verdict, spot["witness"], table)
        return SlagReport(cert, phase)

    # the range reaches a special value
    crossed = [k for k in range(1, n) if lo <= part.theta(k) <= hi]
    for k in crossed:
        wit = _refute(f, n, k)
        if wit is not None:
            phase.update({"crossed_special": k})
            cert = ContinuityCertificate(label, etas, [None] * len(etas), samples, "refuted", wit, [])
            return SlagReport(cert, phase)
    phase.update({"crossed_special": crossed})
    cert = ContinuityCertificate(label, etas, [None] * len(etas), samples, "inconclusive",
                                 {"reason": "phase meets a special value but no witness was constructed"}, [])
    return SlagReport(cert, phase)
