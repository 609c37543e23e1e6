"""Norm-resolvent convergence experiments for cutoff families.

Sweeps a :class:`~kreinlab.models.CutoffFamily`, measures operator-norm
distances between the cutoff resolvents and the limit resolvent, verifies
the uniform-smallness and target-gap hypotheses numerically, and fits
empirical convergence rates.  Every cutoff resolvent is computed twice, by
dense solve and through the block formula, and the two paths must agree;
a disagreement aborts the sweep instead of producing silent garbage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientData, InternalMismatch
from .operators import norm_upper_bound, spectral_norm
from .perturbation import (
    CorrectionS,
    Perturbation,
    SingularModel,
    gamma_threshold,
    krein_resolvent,
    regularized_resolvent,
)

__all__ = [
    "ConvergenceCurve",
    "SmallnessReport",
    "limit_model",
    "nr_point",
    "nr_distance",
    "uniform_smallness_check",
    "target_gap",
    "fit_rate",
    "log_growth_fit",
    "counterterm_norms",
    "default_probe",
    "sweep_family",
]

#: two-path agreement threshold, relative to the resolvent norm
_PATH_TOL = 1e-10

#: distances at or below this floor are treated as exact hits, not fit data
_FIT_FLOOR = 1e-14


@dataclass
class ConvergenceCurve:
    """Distances to the limit resolvent along the cutoff ladder."""

    z_probe: complex
    levels: list
    distances: list
    fitted_rate: Optional[float] = None
    fitted_log: Optional[tuple] = None
    mismatches: list = field(default_factory=list)


@dataclass
class SmallnessReport:
    """Per-level relative-boundedness check of the counterterm residue."""

    gamma: float
    levels: list
    values: list
    margin: float

    @property
    def sup(self):
        return max(self.values) if self.values else 0.0

    @property
    def passed(self):
        return self.sup < 1.0 - self.margin


def limit_model(family, model, lambda_circ=None, S=None):
    """Singular model the family converges to.

    Uses the declared target coupling when available; for genuinely singular
    families (``target_A`` is None) the coupling of the largest level stands
    in, so the measured distances conflate truncation and cutoff error.  The
    correction S is recovered from the declared target T_S unless supplied.
    """
    A_lim = family.target_A
    if A_lim is None:
        A_lim = family.make_An(max(family.levels))
    pert = Perturbation(A_lim, family.s_exponent, model)
    lam0 = family.lambda_circ if lambda_circ is None else float(lambda_circ)
    if S is None:
        if np.count_nonzero(family.target_TS):
            one = np.eye(model.dim, dtype=complex)
            G = model.func_apply(
                lambda lam: 1.0 / (lam0 - lam), A_lim.conj().T, side="left"
            )
            left = np.linalg.solve(one - G.conj().T, family.target_TS)
            S = np.linalg.solve((one - G).T, left.T).T
        else:
            S = np.zeros((model.dim, model.dim), dtype=complex)
    corr = CorrectionS.from_matrix(S, model)
    return SingularModel(model, pert, corr, lam0)


def nr_point(family, limit, n, z, limit_resolvent=None):
    """(distance, path mismatch) at one cutoff level and probe point.

    The cutoff resolvent is computed both by a dense solve and through the
    block formula; if they disagree beyond the path tolerance the sweep is
    untrustworthy and InternalMismatch is raised.
    """
    z = complex(z)
    model = limit.model
    A_n = np.asarray(family.make_An(n), dtype=complex)
    E_n = np.asarray(family.make_En(n), dtype=complex)
    shifted = A_n.conj().T
    shifted += A_n
    shifted -= E_n
    shifted += model.H
    shifted *= -1.0
    shifted[np.diag_indices(model.dim)] += z
    dense = np.linalg.solve(shifted, np.eye(model.dim, dtype=complex))
    del shifted
    block = regularized_resolvent(model, A_n, E_n, family.lambda_circ, z)
    scale = max(1.0, norm_upper_bound(dense))
    block -= dense
    # the O(n^2) norm bound usually certifies agreement outright; iterate
    # only when it cannot
    mismatch = norm_upper_bound(block)
    if mismatch > _PATH_TOL * scale:
        mismatch = spectral_norm(block, tol=1e-3)
        if mismatch > _PATH_TOL * scale:
            raise InternalMismatch(
                f"dense and block resolvents differ by {mismatch:.3e} at level {n}, z={z}"
            )
    del block
    if limit_resolvent is None:
        limit_resolvent = krein_resolvent(limit, z)
    distance = spectral_norm(dense - limit_resolvent, tol=1e-3)
    return distance, mismatch


def nr_distance(family, limit, n, z, limit_resolvent=None):
    """Operator-norm distance between cutoff and limit resolvents at z."""
    return nr_point(family, limit, n, z, limit_resolvent)[0]


def default_probe(family, limit, levels=None):
    """Probe point i*gamma with gamma twice the largest level threshold."""
    model = limit.model
    s = family.s_exponent
    s_star = 1.0 / (1.0 - s)
    gammas = [gamma_threshold(limit)]
    for n in levels if levels is not None else family.levels:
        pert = Perturbation(family.make_An(n), s, model)
        gammas.append(max(1.0, pert.norm_s**s_star))
    return 2.0j * max(gammas)


def sweep_family(family, limit, levels=None, z_points=None):
    """Evaluate the distance curves of a family at one or more probe points.

    Returns one :class:`ConvergenceCurve` per probe point; rate fits are
    attached whenever at least four levels produced distances above the
    fit floor.
    """
    levels = list(levels if levels is not None else family.levels)
    if not levels or levels != sorted(levels):
        raise DomainError("levels must be a nonempty ascending list")
    probes = [default_probe(family, limit, levels)]
    if z_points:
        probes.extend(complex(z) for z in z_points)
    curves = [
        ConvergenceCurve(z_probe=z, levels=list(levels), distances=[]) for z in probes
    ]
    cached = {z: krein_resolvent(limit, z) for z in probes}
    for n in levels:
        for curve in curves:
            d, mism = nr_point(family, limit, n, curve.z_probe, cached[curve.z_probe])
            curve.distances.append(d)
            curve.mismatches.append(mism)
    for curve in curves:
        # exact hits at the floor (the cutoff reproducing the limit) carry no
        # rate information; fit the positive-distance portion when it is long
        # enough
        kept = [
            (n, d) for n, d in zip(curve.levels, curve.distances) if d > _FIT_FLOOR
        ]
        if len(kept) >= 4:
            sub = ConvergenceCurve(
                z_probe=curve.z_probe,
                levels=[n for n, _ in kept],
                distances=[d for _, d in kept],
            )
            rate, const, resid = fit_rate(sub)
            curve.fitted_rate = rate
            curve.fitted_log = (-rate, np.log(const), resid)
    return curves


def uniform_smallness_check(family, model, levels=None, margin=0.05):
    """Relative bound of E_n - A_n R A_n^dagger against the subtracted operator.

    For each level computes the norm of
    (E_n - A_n R A_n^dagger) (i gamma - (H_n - A_n R A_n^dagger))^{-1}
    at gamma twice the largest level threshold; the scheme passes when the
    supremum stays below 1 - margin.
    """
    levels = list(levels if levels is not None else family.levels)
    s = family.s_exponent
    s_star = 1.0 / (1.0 - s)
    gammas = [1.0]
    per_level = []
    for n in levels:
        A_n = np.asarray(family.make_An(n), dtype=complex)
        pert = Perturbation(A_n, s, model)
        gammas.append(max(1.0, pert.norm_s**s_star))
        per_level.append(A_n)
    gamma = 2.0 * max(gammas)
    z = 1j * gamma
    eye = np.eye(model.dim, dtype=complex)
    values = []
    for n, A_n in zip(levels, per_level):
        E_n = np.asarray(family.make_En(n), dtype=complex)
        self_energy = A_n @ model.func_apply(
            lambda lam: 1.0 / (family.lambda_circ - lam), A_n.conj().T, side="left"
        )
        residue = E_n - self_energy
        if not np.count_nonzero(residue):
            values.append(0.0)
            continue
        h_free = model.H + A_n.conj().T + A_n - self_energy
        shifted = z * eye - h_free
        # residue @ inv(shifted) via an adjoint solve
        x = np.linalg.solve(shifted.conj().T, residue.conj().T).conj().T
        values.append(spectral_norm(x))
    return SmallnessReport(gamma=gamma, levels=levels, values=values, margin=margin)


def target_gap(family, limit, n):
    """Distance of E_n - A_n R A_n^dagger to T_S over the T_S-graph unit ball.

    Computed as the spectral norm of
    (E_n - A_n R A_n^dagger - T_S)(T_S^dagger T_S + 1)^{-1/2}.
    """
    model = limit.model
    A_n = np.asarray(family.make_An(n), dtype=complex)
    E_n = np.asarray(family.make_En(n), dtype=complex)
    self_energy = A_n @ model.func_apply(
        lambda lam: 1.0 / (family.lambda_circ - lam), A_n.conj().T, side="left"
    )
    t_target = family.target_TS
    diff = E_n - self_energy - t_target
    vals, vecs = np.linalg.eigh(0.5 * (t_target + t_target.conj().T))
    graph_coefs = (vals**2 + 1.0) ** (-0.5)
    weight = (vecs * graph_coefs[None, :]) @ vecs.conj().T
    return spectral_norm(diff @ weight)


def fit_rate(curve):
    """Least-squares power-law fit log d = log C - rate * log n.

    Only the top half of the levels enters the fit, the asymptotic regime;
    returns (rate, C, max absolute log residual over the fitted points).
    """
    d = np.asarray(curve.distances, dtype=float)
    n = np.asarray(curve.levels, dtype=float)
    if d.size < 4 or np.any(d <= 0.0):
        raise InsufficientData("rate fit needs at least 4 positive distances")
    keep = int(np.ceil(d.size / 2))
    logn = np.log(n[-keep:])
    logd = np.log(d[-keep:])
    design = np.column_stack([np.ones_like(logn), logn])
    coef, *_ = np.linalg.lstsq(design, logd, rcond=None)
    intercept, slope = coef
    residual = float(np.max(np.abs(design @ coef - logd)))
    return float(-slope), float(np.exp(intercept)), residual


def log_growth_fit(pairs):
    """Least-squares fit value = slope * ln(Lambda) + intercept.

    Fitted over the top half of the cutoff range; returns
    (slope, intercept, max absolute deviation there).
    """
    pairs = list(pairs)
    if len(pairs) < 4:
        raise InsufficientData("log-growth fit needs at least 4 pairs")
    lam = np.asarray([p[0] for p in pairs], dtype=float)
    val = np.asarray([p[1] for p in pairs], dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise DomainError("cutoffs must be strictly increasing")
    if not np.all(np.isfinite(val)):
        raise DomainError("values must be finite")
    keep = int(np.ceil(lam.size / 2))
    x = np.log(lam[-keep:])
    y = val[-keep:]
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    intercept, slope = coef
    residual = float(np.max(np.abs(design @ coef - y)))
    return float(slope), float(intercept), residual


def counterterm_norms(family, levels=None):
    """Spectral norm of the counterterm at each level (self-energy scale)."""
    levels = list(levels if levels is not None else family.levels)
    return [spectral_norm(np.asarray(family.make_En(n), dtype=complex)) for n in levels]
