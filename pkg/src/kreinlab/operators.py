"""Dense Hermitian operator core.

Spectral decomposition with functional calculus, resolvents, weighted-norm
scales, 2x2 block operators and Schur-complement inversion.  Everything is
a pure function of immutable inputs; an :class:`OperatorModel` is safe to
share between threads once constructed.
"""

from __future__ import annotations

import numpy as np

from ._structured import DiagLowRank, StructureBreakdown, offdiagonal_is_zero
from .errors import DomainError, SingularBlock, SpectrumHit

__all__ = [
    "OperatorModel",
    "ScaleWeight",
    "BlockOp2",
    "hermitize",
    "spectral_norm",
    "resolvent",
    "scale_weight",
    "op_norm_scale",
    "schur_invert",
    "pseudo_resolvent_defect",
]

#: dense spectral norms are exact up to this dimension, iterative beyond
_EXACT_NORM_DIM = 600


def hermitize(m):
    """Symmetrized copy (m + m^dagger)/2."""
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def spectral_norm(m, tol=1e-8, maxiter=400):
    """Operator 2-norm; exact for small matrices, power iteration beyond.

    The power iteration runs on m^dagger m with a deterministic seeded start
    so repeated runs give identical values.
    """
    if isinstance(m, DiagLowRank):
        forward = m.matvec
        backward = m.H.matvec
        n = m.n
    else:
        m = np.asarray(m)
        if min(m.shape) <= _EXACT_NORM_DIM:
            return float(np.linalg.norm(m, 2))
        forward = lambda x: m @ x
        backward = lambda x: m.conj().T @ x
        n = m.shape[1]
    rng = np.random.default_rng(0x5EED)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(maxiter):
        y = forward(x)
        new = np.linalg.norm(y)
        if new == 0.0:
            return 0.0
        x = backward(y)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return float(new)
        x /= nx
        if abs(new - sigma) <= tol * max(new, 1e-300):
            return float(new)
        sigma = new
    return float(sigma)


def norm_upper_bound(m):
    """Cheap O(n^2) upper bound sqrt(norm_1 * norm_inf) on the 2-norm."""
    if isinstance(m, DiagLowRank):
        m = m.to_dense()
    absm = np.abs(np.asarray(m))
    return float(np.sqrt(absm.sum(axis=0).max() * absm.sum(axis=1).max()))


class OperatorModel:
    """Finite Hermitian matrix playing the free Hamiltonian.

    The input is hermitized on ingestion, (H + H^dagger)/2, which guards
    against file round-trip noise.  The spectral decomposition is computed
    once and cached; exactly diagonal matrices skip the dense eigensolver
    and all functional-calculus applications on them cost O(n^2).
    """

    def __init__(self, H):
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DomainError("H must be a square matrix")
        self.H = hermitize(H)
        self.dim = H.shape[0]
        if offdiagonal_is_zero(self.H):
            self._diag = np.real(np.diag(self.H)).copy()
            order = np.argsort(self._diag, kind="stable")
            self.eigvals = self._diag[order]
            self._order = order
            self._eigvecs = None
        else:
            self._diag = None
            self.eigvals, self._eigvecs = np.linalg.eigh(self.H)
            self._order = None
        self.lambda_inf = float(self.eigvals[0])

    @property
    def is_diagonal(self):
        return self._diag is not None

    @property
    def eigvecs(self):
        if self._eigvecs is None:
            # permutation matrix sorting the stored diagonal
            vecs = np.zeros((self.dim, self.dim), dtype=complex)
            vecs[self._order, np.arange(self.dim)] = 1.0
            self._eigvecs = vecs
        return self._eigvecs

    @property
    def norm(self):
        """Spectral norm of H."""
        return float(max(abs(self.eigvals[0]), abs(self.eigvals[-1])))

    # -- functional calculus -------------------------------------------------

    def func_diag(self, f):
        """f(H) evaluated on the diagonal, in the stored basis order.

        Only available for diagonal models; the structured fast paths build
        their diagonal factors from this.
        """
        if not self.is_diagonal:
            raise DomainError("func_diag requires a diagonal model")
        return np.asarray(f(self._diag), dtype=complex)

    def func_matrix(self, f):
        """Dense f(H) through the spectral decomposition."""
        if self.is_diagonal:
            return np.diag(self.func_diag(f))
        coefs = np.asarray(f(self.eigvals), dtype=complex)
        u = self.eigvecs
        return (u * coefs[None, :]) @ u.conj().T

    def func_apply(self, f, x, side="left"):
        """f(H) @ x (side='left') or x @ f(H) (side='right')."""
        x = np.asarray(x, dtype=complex)
        if self.is_diagonal:
            coefs = self.func_diag(f)
            if side == "left":
                return coefs[:, None] * x if x.ndim == 2 else coefs * x
            return x * coefs[None, :]
        coefs = np.asarray(f(self.eigvals), dtype=complex)
        u = self.eigvecs
        if side == "left":
            return u @ (coefs[:, None] * (u.conj().T @ x))
        return ((u * coefs[None, :]) @ (u.conj().T @ x.conj().T)).conj().T

    # -- resolvent helpers ----------------------------------------------------

    def guard_distance(self):
        """Minimum allowed distance from z to the spectrum."""
        return 1e-8 * (1.0 + self.norm)

    def check_spectrum(self, z):
        if np.min(np.abs(z - self.eigvals)) < self.guard_distance():
            raise SpectrumHit(f"z={z} is within guard distance of the spectrum")

    def resolvent_diag(self, z):
        """1/(z - h_k) in the stored basis order (diagonal models only)."""
        self.check_spectrum(z)
        return 1.0 / (z - self._diag)


def resolvent(model, z):
    """Dense (-H + z)^{-1} through the spectral decomposition."""
    z = complex(z)
    model.check_spectrum(z)
    return model.func_matrix(lambda lam: 1.0 / (z - lam))


class ScaleWeight:
    """Positive weight (H^2 + 1)^{s/2} defining the scale-s inner product."""

    def __init__(self, s, W):
        self.s = float(s)
        self.W = W


def _check_exponent(s):
    if abs(s) > 1.0 + 1e-12:
        raise DomainError(f"scale exponent {s} outside [-1, 1]")


def scale_weight(model, s):
    """Weight matrix for the scale-s norm, W(s) = (H^2 + 1)^{s/2}."""
    _check_exponent(s)
    W = model.func_matrix(lambda lam: (lam**2 + 1.0) ** (s / 2.0))
    return ScaleWeight(s, W)


def op_norm_scale(L, model, s_from, s_to):
    """Operator norm of L as a map between the s_from and s_to scales.

    Computed as the spectral norm of W(s_to) L W(s_from)^{-1}; with both
    exponents zero this is the plain operator norm.
    """
    _check_exponent(s_from)
    _check_exponent(s_to)
    wt = lambda lam: (lam**2 + 1.0) ** (s_to / 2.0)
    wfinv = lambda lam: (lam**2 + 1.0) ** (-s_from / 2.0)
    if isinstance(L, DiagLowRank):
        if not model.is_diagonal:
            L = L.to_dense()
        else:
            left = DiagLowRank.diagonal(model.func_diag(wt))
            right = DiagLowRank.diagonal(model.func_diag(wfinv))
            return spectral_norm(left @ L @ right)
    scaled = model.func_apply(wt, L, side="left")
    scaled = model.func_apply(wfinv, scaled, side="right")
    return spectral_norm(scaled)


class BlockOp2:
    """2x2 block operator on F + F.

    Blocks are square matrices of one common dimension; they may also be
    :class:`DiagLowRank` values on the structured fast path, in which case
    :meth:`dense` materializes them.
    """

    def __init__(self, a11, a12, a21, a22):
        self.a11 = a11
        self.a12 = a12
        self.a21 = a21
        self.a22 = a22
        dims = {b.shape[0] for b in self.blocks} | {b.shape[1] for b in self.blocks}
        if len(dims) != 1:
            raise DomainError("all four blocks must share one dimension")
        self.dim = dims.pop()

    @property
    def blocks(self):
        return (self.a11, self.a12, self.a21, self.a22)

    @classmethod
    def from_dense(cls, m):
        m = np.asarray(m)
        n = m.shape[0] // 2
        if m.shape != (2 * n, 2 * n):
            raise DomainError("assembled block matrix must have even size")
        return cls(m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:])

    def dense(self):
        """Copy with all blocks materialized as ndarrays."""
        return BlockOp2(*(_to_dense(b) for b in self.blocks))

    def assemble(self):
        """The 2n x 2n matrix."""
        b = self.dense()
        return np.block([[b.a11, b.a12], [b.a21, b.a22]])

    def adjoint(self):
        return BlockOp2(
            _adjoint(self.a11), _adjoint(self.a21), _adjoint(self.a12), _adjoint(self.a22)
        )

    def __add__(self, other):
        return BlockOp2(*(x + y for x, y in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        return BlockOp2(*(x - y for x, y in zip(self.blocks, other.blocks)))

    def is_symmetric(self, tol=1e-11):
        """Hermitian block symmetry: a11, a22 Hermitian and a21 = a12^dagger."""
        b = self.dense()
        scale = max(spectral_norm(x) for x in b.blocks) or 1.0
        return (
            spectral_norm(b.a11 - b.a11.conj().T) <= tol * scale
            and spectral_norm(b.a22 - b.a22.conj().T) <= tol * scale
            and spectral_norm(b.a21 - b.a12.conj().T) <= tol * scale
        )


def _to_dense(b):
    return b.to_dense() if isinstance(b, DiagLowRank) else np.asarray(b)


def _adjoint(b):
    return b.H if isinstance(b, DiagLowRank) else np.asarray(b).conj().T


def _inv_checked(m, cond_limit):
    """Inverse with a cheap 1-norm condition estimate; None when too ill."""
    if isinstance(m, DiagLowRank):
        try:
            return m.inv(cond_limit)
        except StructureBreakdown:
            return None
    try:
        minv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return None
    cond = np.linalg.norm(m, 1) * np.linalg.norm(minv, 1)
    if not np.isfinite(cond) or cond > cond_limit:
        return None
    return minv


def schur_invert(b, cond_limit=1e12):
    """Invert a 2x2 block operator through its second Schur complement.

    The pivot is the a22 block; the inverse is assembled from the Schur
    complement a11 - a12 a22^{-1} a21 exactly as in the block-resolvent
    factorization used throughout this package.  When a22 (or the Schur
    complement) is too ill-conditioned the assembled 2n x 2n matrix is
    inverted directly instead; when both paths fail, SingularBlock.
    """
    a11, a12, a21, a22 = b.blocks
    a22inv = _inv_checked(a22, cond_limit)
    if a22inv is not None:
        y = a22inv @ a21
        s2 = a11 - a12 @ y
        s2inv = _inv_checked(s2, cond_limit)
        if s2inv is not None:
            w = a12 @ a22inv
            b11 = s2inv
            b12 = -(s2inv @ w)
            b21 = -(y @ s2inv)
            b22 = a22inv + y @ (s2inv @ w)
            return BlockOp2(b11, b12, b21, b22)
    assembled = b.assemble()
    full = _inv_checked(assembled, cond_limit)
    if full is None:
        raise SingularBlock("neither the Schur path nor direct inversion is well-conditioned")
    return BlockOp2.from_dense(full)


def pseudo_resolvent_defect(rmap, z, w):
    """Norm of R(z) - R(w) - (w - z) R(z) R(w) for a resolvent-like map."""
    rz = rmap(z)
    rw = rmap(w)
    return spectral_norm(rz - rw - (w - z) * (rz @ rw))
