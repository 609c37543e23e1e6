"""Concrete model generators for the renormalization experiments.

A diagonal rank-one family whose self-energy grows without bound along the
cutoff ladder, truncated bosonic Fock spaces with ladder operators, an
exactly solvable field-coupling oracle, and the logarithmically divergent
counterterm integral of the three-dimensional point-source model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureFailure
from .operators import OperatorModel, resolvent
from .perturbation import Perturbation, default_lambda_circ

__all__ = [
    "CutoffFamily",
    "FockSpace",
    "NelsonParams",
    "friedrichs_family",
    "fock_build",
    "van_hove_model",
    "nelson_counterterm",
    "fock_cutoff_family",
]


@dataclass(frozen=True)
class CutoffFamily:
    """Indexed cutoff scheme (A_n, E_n) with its target coupling and T_S.

    ``target_A`` is None for families whose limit coupling is not
    representable at the working dimension; sweeps then build the limit
    from the largest level.  ``make_An``/``make_En`` return dense matrices
    and are pure, so levels can be generated on demand and discarded.
    """

    levels: tuple
    make_An: Callable[[int], np.ndarray]
    make_En: Callable[[int], np.ndarray]
    target_A: Optional[np.ndarray]
    target_TS: np.ndarray
    s_exponent: float
    lambda_circ: float


def friedrichs_family(dim_max, s=0.8, eps=0.05, coupling=0.5, levels=None):
    """Rank-one cutoff family over H = diag(1, ..., dim_max).

    The coupling sends psi to coupling * phi * <v_n, psi> with phi the first
    basis vector and profile v_k = k**(s - 1/2 - eps) truncated at the
    cutoff.  The counterterm is the pure self-energy subtraction
    E_n = A_n R A_n^dagger, so the target correction T_S vanishes while the
    subtracted scalar grows without bound along the ladder (it behaves like
    the partial sums of k**(2s - 2 - 2*eps), divergent for s > 1/2 + eps).
    """
    dim_max = int(dim_max)
    if dim_max < 16:
        raise DomainError("dim_max must be at least 16")
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie strictly inside (0, 1)")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    coupling = float(coupling)

    h_diag = np.arange(1, dim_max + 1, dtype=float)
    model = OperatorModel(np.diag(h_diag).astype(complex))
    k = np.arange(1, dim_max + 1, dtype=float)
    v_full = k ** (s - 0.5 - eps)
    phi = np.zeros(dim_max, dtype=complex)
    phi[0] = 1.0

    def coupling_matrix(v):
        return coupling * np.outer(phi, v.conj())

    target_A = coupling_matrix(v_full.astype(complex))
    pert_full = Perturbation(
        target_A, s, model, low_rank=(coupling * phi[:, None], v_full[None, :].astype(complex))
    )
    lam0 = default_lambda_circ(model, pert_full)

    def make_An(n):
        v = np.zeros(dim_max, dtype=complex)
        v[: min(n, dim_max)] = v_full[: min(n, dim_max)]
        return coupling_matrix(v)

    def make_En(n):
        n_eff = min(n, dim_max)
        sigma = np.sum(v_full[:n_eff] ** 2 / (lam0 - h_diag[:n_eff]))
        return (coupling**2 * sigma) * np.outer(phi, phi.conj())

    if levels is None:
        levels, n = [], 16
        while n <= dim_max // 2:
            levels.append(n)
            n *= 4
    family = CutoffFamily(
        levels=tuple(int(n) for n in levels),
        make_An=make_An,
        make_En=make_En,
        target_A=target_A,
        target_TS=np.zeros((dim_max, dim_max), dtype=complex),
        s_exponent=s,
        lambda_circ=lam0,
    )
    return family, model


# ---------------------------------------------------------------------------
# truncated bosonic Fock space


@dataclass(frozen=True)
class FockSpace:
    """Bosonic Fock space truncated by total particle number.

    The basis enumerates occupation tuples with total at most ``max_total``
    in graded lexicographic order (grade first, then tuple order), so the
    generated matrices are reproducible bit for bit.
    """

    mode_freqs: tuple
    max_total: int
    basis: tuple
    index: dict = field(repr=False)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def n_modes(self):
        return len(self.mode_freqs)

    def annihilation(self, v):
        """Matrix of a(v) = sum_j conj(v_j) a_j on the truncated basis."""
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.n_modes,):
            raise DomainError("test vector must have one entry per mode")
        a = np.zeros((self.dim, self.dim), dtype=complex)
        for col, occ in enumerate(self.basis):
            for j, n_j in enumerate(occ):
                if n_j == 0 or v[j] == 0:
                    continue
                lowered = list(occ)
                lowered[j] -= 1
                row = self.index[tuple(lowered)]
                a[row, col] += v[j].conjugate() * math.sqrt(n_j)
        return a

    def creation(self, v):
        """Adjoint of the truncated a(v); annihilates the top sector."""
        return self.annihilation(v).conj().T

    def dgamma(self, weights=None):
        """Diagonal second quantization of a multiplication by mode weights."""
        w = self.mode_freqs if weights is None else tuple(weights)
        if len(w) != self.n_modes:
            raise DomainError("weights must have one entry per mode")
        diag = [sum(n_j * w_j for n_j, w_j in zip(occ, w)) for occ in self.basis]
        return np.diag(np.asarray(diag, dtype=complex))

    def total_numbers(self):
        return np.array([sum(occ) for occ in self.basis])


def fock_build(mode_freqs, max_total):
    """Enumerate the truncated Fock basis for the given mode frequencies."""
    freqs = tuple(float(w) for w in mode_freqs)
    if not freqs or any(w <= 0 for w in freqs):
        raise DomainError("all mode frequencies must be positive")
    max_total = int(max_total)
    if max_total < 1:
        raise DomainError("max_total must be at least 1")
    j = len(freqs)

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for tail in compositions(total - head, parts - 1):
                yield (head,) + tail

    graded = []
    for total in range(max_total + 1):
        graded.extend(sorted(compositions(total, j)))
    basis_tuple = tuple(graded)
    index = {occ: i for i, occ in enumerate(basis_tuple)}
    return FockSpace(mode_freqs=freqs, max_total=max_total, basis=basis_tuple, index=index)


def van_hove_model(fock, v, s_exponent=0.5):
    """Exactly solvable mode-coupling model on a truncated Fock space.

    H is the diagonal second quantization of the mode frequencies and the
    coupling is a(v).  The untruncated ground energy is
    -sum_j |v_j|^2 / omega_j by completing the square mode by mode, which
    makes this the oracle for cutoff schemes on Fock spaces.
    """
    v = np.asarray(v, dtype=complex)
    model = OperatorModel(fock.dgamma())
    pert = Perturbation(fock.annihilation(v), s_exponent, model)
    exact_energy = -float(
        np.sum(np.abs(v) ** 2 / np.asarray(fock.mode_freqs, dtype=float))
    )
    return model, pert, exact_energy


# ---------------------------------------------------------------------------
# counterterm quadrature


@dataclass(frozen=True)
class NelsonParams:
    """Field mass, particle mass, coupling and particle count."""

    mu: float
    m: float
    g: float = 1.0
    N_particles: int = 1

    def __post_init__(self):
        if self.mu < 0:
            raise DomainError("field mass mu must be nonnegative")
        if self.m <= 0:
            raise DomainError("particle mass m must be positive")
        if self.N_particles < 1:
            raise DomainError("N_particles must be at least 1")


def nelson_counterterm(params, Lambda, quad_tol=1e-10):
    """Radial counterterm integral up to the momentum cutoff.

    Evaluates (1 / (4 pi^2)) * integral_0^Lambda of
    kappa^2 (kappa^2 + mu^2)^{-1/2} (kappa^2 / (2m) + (kappa^2 + mu^2)^{1/2})^{-1}
    by adaptive quadrature with absolute error at most ``quad_tol``.  The
    value grows like (m / (2 pi^2)) log Lambda for large cutoffs; the full
    counterterm operator is this value times g^2 N times the identity.
    """
    Lambda = float(Lambda)
    if Lambda <= 0:
        raise DomainError("Lambda must be positive")
    if quad_tol <= 0:
        raise DomainError("quad_tol must be positive")
    mu, m = params.mu, params.m
    pref = 1.0 / (4.0 * np.pi**2)

    def integrand(kappa):
        if kappa == 0.0:
            return pref * (1.0 if mu == 0.0 else 0.0)
        root = math.sqrt(kappa * kappa + mu * mu)
        return pref * kappa * kappa / (root * (kappa * kappa / (2.0 * m) + root))

    value, abserr = quad(
        integrand, 0.0, Lambda, epsabs=quad_tol / 4.0, epsrel=1e-10, limit=500
    )
    if abserr > quad_tol:
        raise QuadratureFailure(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance {quad_tol:.3e}"
        )
    return float(value)


# ---------------------------------------------------------------------------
# cutoff families on Fock spaces


def fock_cutoff_family(fock, v_profile, cutoffs, s_exponent=0.5, S=None, lambda_circ=None):
    """Mode-truncated coupling family A_n = a(v restricted to the first n modes).

    The counterterm is E_n = A_n R A_n^dagger + (1 - G_n^dagger) S (1 - G_n)
    for a supplied symmetric S (default zero), matching the target
    T_S = (1 - G^dagger) S (1 - G) built from the full profile.  ``v_profile``
    is called with the 1-based mode index.
    """
    cutoffs = tuple(int(n) for n in cutoffs)
    if not cutoffs or any(n < 1 or n > fock.n_modes for n in cutoffs):
        raise DomainError("cutoffs must lie within the mode count")
    if list(cutoffs) != sorted(cutoffs):
        raise DomainError("cutoffs must be ascending")
    v_full = np.array([v_profile(j) for j in range(1, fock.n_modes + 1)], dtype=complex)
    model = OperatorModel(fock.dgamma())
    target_A = fock.annihilation(v_full)
    pert = Perturbation(target_A, s_exponent, model)
    lam0 = default_lambda_circ(model, pert) if lambda_circ is None else float(lambda_circ)
    R = resolvent(model, lam0)
    one = np.eye(fock.dim, dtype=complex)
    S_mat = np.zeros((fock.dim, fock.dim), dtype=complex) if S is None else np.asarray(S, dtype=complex)

    def truncated(n):
        v = v_full.copy()
        v[n:] = 0.0
        return fock.annihilation(v)

    def make_An(n):
        return truncated(n)

    def make_En(n):
        A_n = truncated(n)
        G_n = R @ A_n.conj().T
        E = A_n @ G_n
        if np.count_nonzero(S_mat):
            left = one - G_n.conj().T
            E = E + left @ S_mat @ (one - G_n)
        return E

    G = R @ target_A.conj().T
    if np.count_nonzero(S_mat):
        target_TS = (one - G.conj().T) @ S_mat @ (one - G)
    else:
        target_TS = np.zeros((fock.dim, fock.dim), dtype=complex)
    family = CutoffFamily(
        levels=cutoffs,
        make_An=make_An,
        make_En=make_En,
        target_A=target_A,
        target_TS=target_TS,
        s_exponent=s_exponent,
        lambda_circ=lam0,
    )
    return family, model
