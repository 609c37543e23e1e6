"""Resolvent construction for singular Hamiltonians of the form H + A* + A.

The central objects are the coupling maps G_z built from the free resolvent,
the boundary block operator combining a symmetric correction S with those
maps, and the block-resolvent formula expressing the resolvent of the
interacting operator through a Schur-complement inverse.  A cutoff variant
covers regularized Hamiltonians H + A_n* + A_n - E_n with a bounded
counterterm E_n.

On diagonal models with finite-rank couplings every operation runs on the
exact factored algebra from ``_structured``; the generic dense path is used
everywhere else and as a verified fallback.
"""

from __future__ import annotations

import numpy as np

from ._structured import DiagLowRank, exact_low_rank
from .errors import (
    DomainError,
    InternalMismatch,
    NotBelowThreshold,
    SingularBlock,
    ThetaSingular,
)
from .operators import (
    BlockOp2,
    OperatorModel,
    hermitize,
    op_norm_scale,
    resolvent,
    schur_invert,
    spectral_norm,
)

__all__ = [
    "Perturbation",
    "CorrectionS",
    "SingularModel",
    "GBlockRow",
    "g_z",
    "gg_z",
    "m_z",
    "t_s",
    "theta_s",
    "theta_plus_m",
    "krein_resolvent",
    "h_s_direct",
    "lambda_threshold",
    "gamma_threshold",
    "s_tilde",
    "reparametrize",
    "theta_n",
    "theta_n_plus_m",
    "regularized_resolvent",
    "default_lambda_circ",
]

#: matrices at or above this dimension are probed for exact low rank
_PROBE_DIM = 512


class Perturbation:
    """Bounded coupling map with a declared smoothness exponent.

    ``norm_s`` caches the operator norm of A as a map from the scale-s
    space into the base space.  ``low_rank`` optionally carries an exact
    factorization A = u @ v; large matrices are probed for one
    automatically so that sweeps over rank-one families stay cheap.
    """

    def __init__(self, A, s_exponent, model, low_rank=None):
        s_exponent = float(s_exponent)
        if not 0.0 < s_exponent < 1.0:
            raise DomainError("s_exponent must lie strictly inside (0, 1)")
        self.A = np.asarray(A, dtype=complex)
        if self.A.shape != (model.dim, model.dim):
            raise DomainError("A must match the model dimension")
        self.s_exponent = s_exponent
        if low_rank is None and model.dim >= _PROBE_DIM:
            low_rank = exact_low_rank(self.A)
        self.low_rank = low_rank
        if low_rank is not None and model.is_diagonal:
            a_dlr = DiagLowRank.low_rank(*low_rank)
            self.norm_s = op_norm_scale(a_dlr, model, s_exponent, 0.0)
        else:
            self.norm_s = op_norm_scale(self.A, model, s_exponent, 0.0)


class CorrectionS:
    """Symmetric bounded correction with estimated relative-bound constants.

    ``kato_a`` and ``kato_b`` witness the smallness estimate
    ||S psi|| <= a ||H psi|| + b ||psi|| on the eigenbasis of H.
    """

    def __init__(self, S, kato_a, kato_b):
        self.S = hermitize(S)
        self.kato_a = float(kato_a)
        self.kato_b = float(kato_b)
        if not 0.0 <= self.kato_a < 1.0:
            raise DomainError("kato_a must lie in [0, 1)")
        if self.kato_b < 0.0:
            raise DomainError("kato_b must be nonnegative")

    @classmethod
    def from_matrix(cls, S, model, eps=1e-12):
        """Estimate (a, b) on the eigenbasis; a is capped below one, b = ||S||.

        With b = ||S|| the smallness estimate holds for any a, so the cap is
        harmless; the estimated a only records how H-dominated S looks.
        """
        S = hermitize(S)
        if not np.count_nonzero(S):
            return cls(S, 0.0, 0.0)
        if model.is_diagonal:
            # eigenvectors are basis vectors; column norms suffice
            col = np.linalg.norm(S, axis=0)
            ratios = col / (np.abs(np.real(np.diag(model.H))) + eps)
        else:
            su = S @ model.eigvecs
            ratios = np.linalg.norm(su, axis=0) / (np.abs(model.eigvals) + eps)
        a = min(float(ratios.max(initial=0.0)), 1.0 - 1e-3)
        return cls(S, a, spectral_norm(S))

    @property
    def is_zero(self):
        return not np.count_nonzero(self.S)


class SingularModel:
    """Free model, coupling, correction and the reference shift lambda_circ."""

    def __init__(self, model, pert, corr, lambda_circ):
        lambda_circ = float(lambda_circ)
        if lambda_circ >= model.lambda_inf:
            raise DomainError("lambda_circ must lie strictly below the spectrum")
        self.model = model
        self.pert = pert
        self.corr = corr
        self.lambda_circ = lambda_circ
        self._R = None
        self._G = None
        self._TS = None

    @property
    def A(self):
        return self.pert.A

    @property
    def S(self):
        return self.corr.S

    @property
    def R(self):
        """Free resolvent at the reference shift (dense, cached)."""
        if self._R is None:
            self._R = resolvent(self.model, self.lambda_circ)
        return self._R

    @property
    def G(self):
        """Coupling map at the reference shift (dense, cached)."""
        if self._G is None:
            self._G = g_z(self, self.lambda_circ)
        return self._G

    @property
    def T_S(self):
        if self._TS is None:
            self._TS = t_s(self)
        return self._TS

    @property
    def structured(self):
        """True when the exact factored fast path applies."""
        return (
            self.model.is_diagonal
            and self.pert.low_rank is not None
            and self.corr.is_zero
        )


def default_lambda_circ(model, pert):
    """Reference shift comfortably below every invertibility threshold."""
    s_star = 1.0 / (1.0 - pert.s_exponent)
    return model.lambda_inf - max(2.0, 2.0 * pert.norm_s**s_star)


# ---------------------------------------------------------------------------
# coupling maps


def g_z(sm, z):
    """Coupling map (A R_zbar)^dagger = R_z A^dagger at a resolvent point."""
    z = complex(z)
    model = sm.model
    model.check_spectrum(z)
    return model.func_apply(lambda lam: 1.0 / (z - lam), sm.A.conj().T, side="left")


class GBlockRow:
    """The pair [G_z | R_z] acting on stacked arguments psi + phi."""

    def __init__(self, G, R):
        self.G = G
        self.R = R

    def apply(self, psi, phi):
        return self.G @ psi + self.R @ phi

    def as_matrix(self):
        """dim x 2*dim matrix [G_z, R_z]."""
        return np.hstack([self.G, self.R])


def gg_z(sm, z):
    """Extended coupling row combining G_z with the free resolvent."""
    z = complex(z)
    return GBlockRow(g_z(sm, z), resolvent(sm.model, z))


def m_z(sm, z):
    """Weyl-type block (z - lambda_circ) GG^dagger GG_z.

    Vanishes at z = lambda_circ and satisfies the difference identity
    M_z - M_w = (z - w) GG_wbar^dagger GG_z together with M_z^dagger = M_zbar.
    """
    z = complex(z)
    p = z - sm.lambda_circ
    G, R = sm.G, sm.R
    Gz = g_z(sm, z)
    Rz = resolvent(sm.model, z)
    gh = G.conj().T
    return BlockOp2(p * (gh @ Gz), p * (gh @ Rz), p * (R @ Gz), p * (R @ Rz))


# ---------------------------------------------------------------------------
# boundary blocks


def t_s(sm):
    """Conjugated correction (1 - G^dagger) S (1 - G)."""
    if sm.corr.is_zero:
        return np.zeros((sm.model.dim, sm.model.dim), dtype=complex)
    one = np.eye(sm.model.dim, dtype=complex)
    left = one - sm.G.conj().T
    return left @ sm.S @ (one - sm.G)


def theta_s(sm):
    """Boundary block operator [[T_S, 1-G^dagger], [1-G, -R]]."""
    one = np.eye(sm.model.dim, dtype=complex)
    a21 = one - sm.G
    return BlockOp2(sm.T_S, a21.conj().T, a21, -sm.R)


def theta_plus_m(sm, z):
    """Theta_S + M_z in the closed blockwise form.

    The z-dependent blocks are [[T_S + A(G - G_z), 1 - G_zbar^dagger],
    [1 - G_z, -R_z]]; this agrees with theta_s(sm) + m_z(sm, z) and is the
    representation actually inverted by the resolvent formula.
    """
    z = complex(z)
    model = sm.model
    one = np.eye(model.dim, dtype=complex)
    Rz = resolvent(model, z)
    Gz = g_z(sm, z)
    a11 = sm.T_S + sm.A @ (sm.G - Gz)
    a12 = one - sm.A @ Rz  # A R_z equals (G_zbar)^dagger
    a21 = one - Gz
    return BlockOp2(a11, a12, a21, -Rz)


# ---------------------------------------------------------------------------
# structured fast path


def _dlr_from_factors(factors):
    u, v = factors
    return DiagLowRank.low_rank(u, v)


def _sandwich_structured(model, a_dlr, x_dlr, z):
    """Factored evaluation of R_z + GG_z (Theta + M_z)^{-1} GG_zbar^dagger.

    ``x_dlr`` is the z-independent top-left content: the counterterm E_n on
    the cutoff route, A R A^dagger + T_S on the singular route.  Returns the
    dense resolvent of H + A^dagger + A - X, or None when verification
    probes reject the factored result.
    """
    rz = model.resolvent_diag(complex(z))
    Rz = DiagLowRank.diagonal(rz)
    one = DiagLowRank.identity(model.dim)
    a_rz = a_dlr @ Rz  # equals (G_zbar)^dagger
    g_z_dlr = Rz @ a_dlr.H
    blocks = BlockOp2(x_dlr - a_rz @ a_dlr.H, one - a_rz, one - g_z_dlr, -Rz)
    binv = schur_invert(blocks)
    top = binv.a11 @ a_rz + binv.a12 @ Rz
    bot = binv.a21 @ a_rz + binv.a22 @ Rz
    res = Rz + (g_z_dlr @ top + Rz @ bot)

    # residual probes: (z - H - A^dagger - A + X) res(x) must reproduce x
    rng = np.random.default_rng(0xA55E55)
    h = model.func_diag(lambda lam: lam)
    for _ in range(2):
        x = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
        y = res.matvec(x)
        w = (
            complex(z) * y
            - h * y
            - a_dlr.H.matvec(y)
            - a_dlr.matvec(y)
            + x_dlr.matvec(y)
        )
        if np.linalg.norm(w - x) > 1e-7 * max(1.0, np.linalg.norm(x) + np.linalg.norm(y)):
            return None
    return res.to_dense()


# ---------------------------------------------------------------------------
# resolvent formulas


def _sandwich_dense(model, A, a11_extra, z):
    """Dense evaluation of R_z + GG_z (Theta + M_z)^{-1} GG_zbar^dagger."""
    z = complex(z)
    one = np.eye(model.dim, dtype=complex)
    Rz = resolvent(model, z)
    adag = A.conj().T
    Gz = model.func_apply(lambda lam: 1.0 / (z - lam), adag, side="left")
    a_rz = A @ Rz
    blocks = BlockOp2(a11_extra - a_rz @ adag, one - a_rz, one - Gz, -Rz)
    try:
        binv = schur_invert(blocks)
    except SingularBlock as exc:
        raise ThetaSingular(f"boundary block operator singular at z={z}") from exc
    top = binv.a11 @ a_rz + binv.a12 @ Rz
    bot = binv.a21 @ a_rz + binv.a22 @ Rz
    return Rz + Gz @ top + Rz @ bot


def krein_resolvent(sm, z):
    """Resolvent of the singular realization through the block formula.

    Evaluates R_z + GG_z (Theta_S + M_z)^{-1} GG_zbar^dagger with the block
    inverse delivered by ``schur_invert``; agrees with the direct resolvent
    of ``h_s_direct`` wherever both are defined.
    """
    z = complex(z)
    model = sm.model
    model.check_spectrum(z)
    if sm.structured:
        a_dlr = _dlr_from_factors(sm.pert.low_rank)
        r0 = DiagLowRank.diagonal(model.resolvent_diag(sm.lambda_circ))
        x_dlr = a_dlr @ r0 @ a_dlr.H  # T_S is zero on the structured path
        try:
            out = _sandwich_structured(model, a_dlr, x_dlr, z)
        except SingularBlock as exc:
            raise ThetaSingular(f"boundary block operator singular at z={z}") from exc
        if out is not None:
            return out
    # top-left z-independent content: T_S + A R A^dagger
    a11_extra = sm.T_S + sm.A @ sm.G
    return _sandwich_dense(model, sm.A, a11_extra, z)


def h_s_direct(sm):
    """Explicit matrix H + A^dagger + A - A G - T_S of the realization.

    This is the independent oracle for ``krein_resolvent``: its direct
    resolvent must match the block formula.  Hermitian up to roundoff since
    A G = A R A^dagger.
    """
    return sm.model.H + sm.A.conj().T + sm.A - sm.A @ sm.G - sm.T_S


# ---------------------------------------------------------------------------
# invertibility thresholds


def lambda_threshold(sm):
    """Largest shift below which 1 - G_lambda is guaranteed invertible."""
    lam_inf = sm.model.lambda_inf
    s_star = 1.0 / (1.0 - sm.pert.s_exponent)
    return lam_inf - max(np.sqrt(lam_inf**2 + 1.0), sm.pert.norm_s**s_star)


def gamma_threshold(sm):
    """Imaginary-axis radius above which 1 - G_{i gamma} is invertible."""
    s_star = 1.0 / (1.0 - sm.pert.s_exponent)
    return max(1.0, sm.pert.norm_s**s_star)


# ---------------------------------------------------------------------------
# change of reference shift


def s_tilde(sm, lambda_new, asym_tol=1e-10):
    """Correction reproducing the same realization at a new reference shift.

    Computes (1 - G_lambda^dagger)^{-1} (A (G - G_lambda) + T_S)
    (1 - G_lambda)^{-1}, checks the symmetry residual against ``asym_tol``
    times the norm, and returns the hermitized correction with refreshed
    smallness constants.
    """
    lambda_new = float(lambda_new)
    if lambda_new >= lambda_threshold(sm):
        raise NotBelowThreshold(
            f"lambda_new={lambda_new} is not below the invertibility threshold"
        )
    model = sm.model
    one = np.eye(model.dim, dtype=complex)
    g_lam = g_z(sm, lambda_new)
    mid = sm.A @ (sm.G - g_lam) + sm.T_S
    left = np.linalg.solve(one - g_lam.conj().T, mid)
    out = np.linalg.solve((one - g_lam).T, left.T).T
    asym = spectral_norm(out - out.conj().T)
    scale = max(1.0, spectral_norm(out))
    if asym > asym_tol * scale:
        raise InternalMismatch(
            f"reparametrized correction asymmetry {asym:.3e} exceeds tolerance"
        )
    return CorrectionS.from_matrix(out, model)


def reparametrize(sm, lambda_new):
    """Equivalent model at a new reference shift (same realization)."""
    corr = s_tilde(sm, lambda_new)
    return SingularModel(sm.model, sm.pert, corr, lambda_new)


# ---------------------------------------------------------------------------
# cutoff (regularized) route


def theta_n(model, A_n, E_n, lambda_circ):
    """Boundary blocks [[E_n - A_n R A_n^dagger, 1-G_n^dagger], [1-G_n, -R]]."""
    lambda_circ = float(lambda_circ)
    if lambda_circ >= model.lambda_inf:
        raise DomainError("lambda_circ must lie strictly below the spectrum")
    A_n = np.asarray(A_n, dtype=complex)
    E_n = np.asarray(E_n, dtype=complex)
    one = np.eye(model.dim, dtype=complex)
    G_n = model.func_apply(
        lambda lam: 1.0 / (lambda_circ - lam), A_n.conj().T, side="left"
    )
    a21 = one - G_n
    a11 = E_n - A_n @ G_n  # A_n G_n = A_n R A_n^dagger
    return BlockOp2(a11, a21.conj().T, a21, -resolvent(model, lambda_circ))


def theta_n_plus_m(model, A_n, E_n, lambda_circ, z):
    """Theta_n + M_{n,z} in closed form.

    The z-dependent blocks are [[E_n - A_n R_z A_n^dagger, 1-G_{n,zbar}^dagger],
    [1-G_{n,z}, -R_z]]; the second Schur complement of this block operator is
    exactly z - (H + A_n^dagger + A_n - E_n).
    """
    z = complex(z)
    float(lambda_circ)  # shift only fixes the splitting; the sum is shift-free
    A_n = np.asarray(A_n, dtype=complex)
    E_n = np.asarray(E_n, dtype=complex)
    one = np.eye(model.dim, dtype=complex)
    Rz = resolvent(model, z)
    Gnz = model.func_apply(lambda lam: 1.0 / (z - lam), A_n.conj().T, side="left")
    a_rz = A_n @ Rz
    return BlockOp2(E_n - a_rz @ A_n.conj().T, one - a_rz, one - Gnz, -Rz)


def regularized_resolvent(model, A_n, E_n, lambda_circ, z):
    """Resolvent of the cutoff Hamiltonian H + A_n^dagger + A_n - E_n.

    Evaluated through the same block formula as ``krein_resolvent``; equals
    the dense inverse of z - (H + A_n^dagger + A_n - E_n).
    """
    z = complex(z)
    model.check_spectrum(z)
    float(lambda_circ)
    A_n = np.asarray(A_n, dtype=complex)
    E_n = np.asarray(E_n, dtype=complex)
    if model.is_diagonal and model.dim >= _PROBE_DIM:
        fa = exact_low_rank(A_n)
        fe = exact_low_rank(E_n)
        if fa is not None and fe is not None:
            try:
                out = _sandwich_structured(
                    model, _dlr_from_factors(fa), _dlr_from_factors(fe), z
                )
            except SingularBlock as exc:
                raise ThetaSingular(f"boundary block operator singular at z={z}") from exc
            if out is not None:
                return out
    return _sandwich_dense(model, A_n, E_n, z)
