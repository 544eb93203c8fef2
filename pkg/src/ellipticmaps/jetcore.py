"""Symmetric matrices, gradient-free 2-jets and reproducible jet sampling.

Everything downstream works on *batches*: a batch of jets is a pair of
arrays ``r`` with shape ``(n,)`` and ``a`` with shape ``(n, N, N)``.  The
single-jet types :class:`SymMat` and :class:`Jet` are thin immutable wrappers
used at API boundaries and in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ConvergenceDefect, InvalidParameter

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 64


# ---------------------------------------------------------------------------
# eigen-solver
# ---------------------------------------------------------------------------

def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS,
                vectors: bool = True):
    """Batched cyclic Jacobi eigen-decomposition of symmetric matrices.

    ``a`` has shape ``(..., N, N)``.  Returns ``(w, q)`` with ``w`` ascending
    along the last axis and ``a ≈ q @ diag(w) @ q.T``.  Sweeps stop once the
    off-diagonal Frobenius norm is below ``tol`` times the Frobenius norm of
    the input (absolute ``tol`` for the zero matrix).  With
    ``vectors=False`` the rotations are not accumulated and ``q`` is None.
    """
    a = np.array(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidParameter(f"expected square matrices, got shape {a.shape}")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n))
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    m = a.shape[0]
    q = np.broadcast_to(np.eye(n), (m, n, n)).copy()

    scale = np.sqrt(np.einsum("bij,bij->b", a, a))
    scale = np.where(scale > 0.0, scale, 1.0)
    pairs = [(p, s) for p in range(n) for s in range(p + 1, n)]
    iu0, iu1 = np.triu_indices(n, 1)

    active = np.arange(m)
    for _ in range(max_sweeps):
        sub = a[active]
        upper = sub[:, iu0, iu1]
        off = np.sqrt(2.0 * np.einsum("bk,bk->b", upper, upper))
        keep = off > tol * scale[active]
        active = active[keep]
        if active.size == 0:
            break
        sub = sub[keep]
        qs = q[active] if vectors else None
        _jacobi_sweep(sub, qs, pairs)
        a[active] = sub
        if vectors:
            q[active] = qs
    else:
        raise ConvergenceDefect(f"cyclic Jacobi did not converge in {max_sweeps} sweeps")

    w = np.einsum("bii->bi", a).copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if not vectors:
        return w.reshape(batch_shape + (n,)), None
    q = np.take_along_axis(q, order[:, None, :], axis=-1)
    return w.reshape(batch_shape + (n,)), q.reshape(batch_shape + (n, n))


def _jacobi_sweep(a, q, pairs):
    """One cyclic sweep of rotations, in place on ``a`` (and ``q``)."""
    for p, s in pairs:
        apq = a[:, p, s]
        live = np.abs(apq) > 1e-300
        if not live.any():
            continue
        app = a[:, p, p]
        aqq = a[:, s, s]
        safe = np.where(live, apq, 1.0)
        with np.errstate(over="ignore"):
            theta = (aqq - app) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
        t = np.where(theta == 0.0, 1.0, t)
        c = 1.0 / np.sqrt(t * t + 1.0)
        sn = t * c
        c = np.where(live, c, 1.0)[:, None]
        sn = np.where(live, sn, 0.0)[:, None]

        cp = a[:, :, p].copy()
        cq = a[:, :, s]
        a[:, :, p] = c * cp - sn * cq
        a[:, :, s] = sn * cp + c * cq
        rp = a[:, p, :].copy()
        rq = a[:, s, :]
        a[:, p, :] = c * rp - sn * rq
        a[:, s, :] = sn * rp + c * rq
        a[live, p, s] = 0.0
        a[live, s, p] = 0.0
        if q is not None:
            vp = q[:, :, p].copy()
            vq = q[:, :, s]
            q[:, :, p] = c * vp - sn * vq
            q[:, :, s] = sn * vp + c * vq


def eigvalsh(a) -> np.ndarray:
    """Ascending eigenvalues of a (batch of) symmetric matrices."""
    return jacobi_eigh(a, vectors=False)[0]


# ---------------------------------------------------------------------------
# single-value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymMat:
    """Dense symmetric matrix stored as its upper triangle (row-major)."""

    dim: int
    entries: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameter("SymMat dimension must be positive")
        if len(self.entries) != self.dim * (self.dim + 1) // 2:
            raise InvalidParameter(
                f"SymMat of dim {self.dim} needs {self.dim * (self.dim + 1) // 2} entries"
            )

    @classmethod
    def from_array(cls, a) -> "SymMat":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameter(f"expected a square matrix, got shape {a.shape}")
        scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
        if np.abs(a - a.T).max(initial=0.0) > 1e-10 * scale:
            raise InvalidParameter("matrix is not symmetric")
        # rounding-level asymmetry is averaged out
        a = 0.5 * (a + a.T)
        iu = np.triu_indices(a.shape[0])
        return cls(a.shape[0], tuple(float(v) for v in a[iu]))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "SymMat":
        return cls.from_array(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "SymMat":
        return cls.from_array(scale * np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymMat":
        return cls.from_array(np.zeros((n, n)))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        iu = np.triu_indices(self.dim)
        out[iu] = self.entries
        out.T[iu] = self.entries
        return out

    def __add__(self, other: "SymMat") -> "SymMat":
        return SymMat.from_array(self.to_array() + other.to_array())

    def __neg__(self) -> "SymMat":
        return SymMat(self.dim, tuple(-v for v in self.entries))

    def scaled(self, factor: float) -> "SymMat":
        return SymMat(self.dim, tuple(factor * v for v in self.entries))


@dataclass(frozen=True)
class Jet:
    """A gradient-free 2-jet ``(r, A)``."""

    r: float
    a: SymMat

    @classmethod
    def of(cls, r: float, a) -> "Jet":
        if not isinstance(a, SymMat):
            a = SymMat.from_array(a)
        return cls(float(r), a)

    @property
    def dim(self) -> int:
        return self.a.dim

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.r + other.r, self.a + other.a)

    def __neg__(self) -> "Jet":
        return Jet(-self.r, -self.a)

    def to_json(self) -> dict:
        return {"r": self.r, "A": self.a.to_array().tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Jet":
        return cls.of(data["r"], data["A"])


def eig_sym(a: SymMat):
    """Ordered eigenvalues and orthogonal eigenvector factor of ``a``."""
    w, q = jacobi_eigh(a.to_array())
    return w, q


def jet_norm(j: Jet) -> float:
    """``max(|r|, spectral radius of A)``."""
    w = eigvalsh(j.a.to_array())
    return float(max(abs(j.r), np.max(np.abs(w))))


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JetBatch:
    r: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        if self.r.ndim != 1 or self.a.ndim != 3 or self.a.shape[0] != self.r.shape[0]:
            raise InvalidParameter(
                f"inconsistent batch shapes r{self.r.shape} a{self.a.shape}"
            )

    @classmethod
    def from_jets(cls, jets: Sequence[Jet]) -> "JetBatch":
        r = np.array([j.r for j in jets], dtype=float)
        a = np.array([j.a.to_array() for j in jets], dtype=float)
        return cls(r, a)

    @property
    def dim(self) -> int:
        return self.a.shape[-1]

    def __len__(self) -> int:
        return self.r.shape[0]

    def __getitem__(self, i: int) -> Jet:
        return Jet.of(self.r[i], self.a[i])

    def __iter__(self) -> Iterator[Jet]:
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> "JetBatch":
        return JetBatch(self.r[idx], self.a[idx])


def batch_norm(r, a) -> np.ndarray:
    """Jet norm of every member of a batch."""
    w = eigvalsh(a)
    return np.maximum(np.abs(r), np.max(np.abs(w), axis=-1))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleBox:
    """Parameters of a reproducible random jet stream."""

    r_range: tuple = (-1.0, 1.0)
    eig_scale: float = 1.0
    seed: int = 0
    count: int = 1000

    def __post_init__(self):
        if not self.eig_scale > 0:
            raise InvalidParameter(f"eig_scale must be positive, got {self.eig_scale}")
        if self.count < 1:
            raise InvalidParameter(f"count must be at least 1, got {self.count}")
        lo, hi = self.r_range
        if not lo <= hi:
            raise InvalidParameter(f"malformed r_range {self.r_range}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def split(self, k: int) -> list:
        """``k`` independent child generators (deterministic per index)."""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(k)]


def random_orthogonal(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """Haar-distributed orthogonal matrices, shape ``(count, n, n)``."""
    z = rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z)
    d = np.sign(np.einsum("bii->bi", r))
    d = np.where(d == 0, 1.0, d)
    return q * d[:, None, :]


def random_spectra(rng: np.random.Generator, n: int, count: int, eig_scale: float) -> np.ndarray:
    """Sign-symmetric eigenvalues, log-uniform in ``[1e-3*scale, scale]``."""
    lo, hi = math.log(1e-3 * eig_scale), math.log(eig_scale)
    mags = np.exp(rng.uniform(lo, hi, size=(count, n)))
    signs = rng.choice([-1.0, 1.0], size=(count, n))
    return mags * signs


def random_jets(box: SampleBox, n: int, rng: np.random.Generator | None = None) -> JetBatch:
    """``box.count`` random jets of dimension ``n``.

    ``A = Q diag(λ) Qᵀ`` with ``Q`` Haar-orthogonal; ``r`` uniform in the box's
    range.  Identical boxes give identical streams unless ``rng`` overrides
    the box seed.
    """
    if n < 1:
        raise InvalidParameter("jet dimension must be positive")
    rng = box.rng() if rng is None else rng
    lo, hi = box.r_range
    r = rng.uniform(lo, hi, size=box.count)
    lam = random_spectra(rng, n, box.count, box.eig_scale)
    q = random_orthogonal(rng, n, box.count)
    a = np.einsum("bij,bj,bkj->bik", q, lam, q)
    return JetBatch(r, 0.5 * (a + np.swapaxes(a, -1, -2)))


def random_q_elements(rng: np.random.Generator, n: int, count: int, scale: float = 1.0):
    """Random ``(s, P)`` with ``s <= 0`` and ``P`` positive semidefinite."""
    s = -scale * rng.exponential(size=count)
    lam = scale * rng.exponential(size=(count, n))
    # a quarter of the draws sit on faces of the cone
    lam[rng.random(count) < 0.25, 0] = 0.0
    s[rng.random(count) < 0.25] = 0.0
    q = random_orthogonal(rng, n, count)
    p = np.einsum("bij,bj,bkj->bik", q, lam, q)
    return s, 0.5 * (p + np.swapaxes(p, -1, -2))


def eye_batch(n: int, count: int) -> np.ndarray:
    return np.broadcast_to(np.eye(n), (count, n, n))
