"""Exact diagonal-plus-low-rank matrix algebra.

Large renormalization sweeps combine a diagonal free Hamiltonian with
finite-rank couplings, so every block showing up in the resolvent formulas
is of the form diag(d) + U V with a rank far below the dimension.  Keeping
that factorization explicit turns the O(n^3) block inversions into O(n^2)
work.  The algebra below is exact (Woodbury identity, no truncation); any
conditioning problem raises :class:`StructureBreakdown`, and callers fall
back to the dense path.
"""

from __future__ import annotations

import numpy as np

from .errors import KreinLabError

_MAX_RANK = 64


class StructureBreakdown(KreinLabError):
    """The factored path cannot continue; caller should go dense."""


class DiagLowRank:
    """Matrix diag(d) + u @ v with u of shape (n, r) and v of shape (r, n)."""

    __slots__ = ("d", "u", "v")

    # keep numpy from consuming us in mixed expressions; reflected ops run
    __array_ufunc__ = None

    def __init__(self, d, u=None, v=None):
        d = np.asarray(d, dtype=complex)
        n = d.shape[0]
        if u is None:
            u = np.zeros((n, 0), dtype=complex)
            v = np.zeros((0, n), dtype=complex)
        self.d = d
        self.u = np.asarray(u, dtype=complex)
        self.v = np.asarray(v, dtype=complex)
        if self.u.shape != (n, self.v.shape[0]) or self.v.shape[1] != n:
            raise ValueError("inconsistent factor shapes")
        if self.rank > _MAX_RANK:
            raise StructureBreakdown(f"rank {self.rank} exceeds cap {_MAX_RANK}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n):
        return cls(np.ones(n, dtype=complex))

    @classmethod
    def diagonal(cls, d):
        return cls(np.asarray(d, dtype=complex))

    @classmethod
    def low_rank(cls, u, v):
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        v = np.atleast_2d(np.asarray(v, dtype=complex))
        if u.shape[0] == 1 and v.shape[0] != 1:
            u = u.T
        if u.ndim == 2 and u.shape[1] != v.shape[0] and u.shape[0] == v.shape[0]:
            u = u.T
        n = u.shape[0]
        return cls(np.zeros(n, dtype=complex), u, v)

    # -- basic queries -----------------------------------------------------

    @property
    def n(self):
        return self.d.shape[0]

    @property
    def rank(self):
        return self.u.shape[1]

    @property
    def shape(self):
        return (self.n, self.n)

    def to_dense(self):
        out = np.diag(self.d)
        if self.rank:
            out += self.u @ self.v
        return out

    def matvec(self, x):
        y = self.d * x
        if self.rank:
            y = y + self.u @ (self.v @ x)
        return y

    # -- ring operations ---------------------------------------------------

    @property
    def H(self):
        """Conjugate transpose."""
        return DiagLowRank(self.d.conj(), self.v.conj().T, self.u.conj().T)

    def __neg__(self):
        return DiagLowRank(-self.d, -self.u, self.v)

    def __add__(self, other):
        if isinstance(other, DiagLowRank):
            return DiagLowRank(
                self.d + other.d,
                np.hstack([self.u, other.u]),
                np.vstack([self.v, other.v]),
            )
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, DiagLowRank):
            return self + (-other)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return DiagLowRank(scalar * self.d, scalar * self.u, self.v)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, DiagLowRank):
            # (D1 + U1 V1)(D2 + U2 V2) regrouped into a single factor pair
            d = self.d * other.d
            u = np.hstack([self.d[:, None] * other.u, self.u])
            cross = self.v @ other.u
            v = np.vstack([other.v, self.v * other.d[None, :] + cross @ other.v])
            return DiagLowRank(d, u, v)
        other = np.asarray(other)
        if other.ndim == 1:
            return self.matvec(other)
        out = self.d[:, None] * other
        if self.rank:
            out += self.u @ (self.v @ other)
        return out

    def __rmatmul__(self, other):
        other = np.asarray(other)
        if other.ndim == 1:
            y = other * self.d
            if self.rank:
                y = y + (other @ self.u) @ self.v
            return y
        out = other * self.d[None, :]
        if self.rank:
            out += (other @ self.u) @ self.v
        return out

    # -- inversion ---------------------------------------------------------

    def inv(self, cond_limit=1e12):
        """Woodbury inverse; the diagonal part must be invertible on its own."""
        absd = np.abs(self.d)
        dmax = absd.max() if absd.size else 0.0
        if dmax == 0.0 or absd.min() < dmax / cond_limit:
            raise StructureBreakdown("diagonal part is not safely invertible")
        dinv = 1.0 / self.d
        if not self.rank:
            return DiagLowRank(dinv)
        cap = np.eye(self.rank, dtype=complex) + self.v @ (dinv[:, None] * self.u)
        if np.linalg.cond(cap) > cond_limit:
            raise StructureBreakdown("capacitance matrix is ill-conditioned")
        w = np.linalg.solve(cap, self.v * dinv[None, :])
        return DiagLowRank(dinv, -dinv[:, None] * self.u, w)


def offdiagonal_is_zero(m):
    """True when the dense square matrix has exactly zero off-diagonal part."""
    m = np.asarray(m)
    scratch = m.copy()
    np.fill_diagonal(scratch, 0.0)
    return not np.count_nonzero(scratch)


def exact_low_rank(m, max_rank=8, probe_seed=0x1F2E3D):
    """Return (u, v) with m = u @ v when m has exact numerical rank <= max_rank.

    Uses a randomized range finder with verification probes; returns None
    when the matrix is not (numerically exactly) low rank.  The factors are
    reliable to roughly machine precision times the matrix norm.
    """
    m = np.asarray(m)
    n = m.shape[0]
    if n <= max_rank:
        return None
    rng = np.random.default_rng(probe_seed)
    k = min(n, max_rank + 4)
    omega = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    sample = m @ omega
    scale = np.abs(sample).max()
    if scale == 0.0:
        return np.zeros((n, 0), dtype=complex), np.zeros((0, n), dtype=complex)
    q, r = np.linalg.qr(sample)
    diag_r = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag_r > 1e-13 * diag_r.max()))
    if rank > max_rank:
        return None
    q = q[:, :rank]
    factor = q.conj().T @ m
    # verification: fresh probes must be reproduced to near machine precision
    check = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    resid = m @ check - q @ (factor @ check)
    ref = np.abs(m @ check).max() + scale
    if np.abs(resid).max() > 1e-11 * ref:
        return None
    return q, factor
