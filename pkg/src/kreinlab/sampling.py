"""Seeded random model generation for verification suites and tests.

Hermitian H comes from symmetrized complex Gaussian entries; the coupling A
is Gaussian rescaled so its scale-s norm lands in a fixed band, which pins
the invertibility thresholds; S is a Hermitian Gaussian rescaled to an
estimated relative bound around 0.3.  The reference shift is chosen far
enough below the spectrum that the boundary operator is provably invertible
there, so every generated model is safe for the resolvent formulas.
"""

from __future__ import annotations

import numpy as np

from .operators import OperatorModel, hermitize, op_norm_scale, spectral_norm
from .perturbation import CorrectionS, Perturbation, SingularModel

__all__ = [
    "random_operator_model",
    "random_perturbation",
    "random_correction",
    "random_singular_model",
]

#: target band for the scale-s norm of the coupling
_NORM_BAND = (1.0, 1.6)


def _complex_gaussian(rng, dim):
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_operator_model(rng, dim, shift_to_zero=False):
    """Random Hermitian model; optionally shifted so the spectrum starts at 0."""
    H = hermitize(_complex_gaussian(rng, dim))
    if shift_to_zero:
        evals = np.linalg.eigvalsh(H)
        H = H - evals[0] * np.eye(dim)
    return OperatorModel(H)


def random_perturbation(rng, model, s_exponent=0.5):
    """Gaussian coupling rescaled into the fixed scale-norm band."""
    A = _complex_gaussian(rng, model.dim)
    target = rng.uniform(*_NORM_BAND)
    raw = op_norm_scale(A, model, s_exponent, 0.0)
    return Perturbation(A * (target / raw), s_exponent, model)


def random_correction(rng, model, target_a=0.3):
    """Hermitian Gaussian rescaled to an estimated relative bound target_a."""
    S = hermitize(_complex_gaussian(rng, model.dim))
    probe = CorrectionS.from_matrix(S, model)
    if probe.kato_a > 0:
        S = S * (target_a / probe.kato_a)
    return CorrectionS.from_matrix(S, model)


def random_singular_model(seed, dim, s_exponent=0.5, with_correction=True, margin=1.0):
    """Complete seeded model with a provably safe reference shift.

    The shift sits below
    lambda_inf - max(sqrt(lambda_inf^2 + 1), ||A||^{1/(1-s)}, b/(1-a)) - margin,
    which guarantees the boundary operator is invertible at the shift and
    hence on the whole resolvent set of the realization.
    """
    rng = np.random.default_rng(seed)
    model = random_operator_model(rng, dim)
    pert = random_perturbation(rng, model, s_exponent)
    if with_correction:
        corr = random_correction(rng, model)
    else:
        corr = CorrectionS.from_matrix(np.zeros((dim, dim)), model)
    s_star = 1.0 / (1.0 - pert.s_exponent)
    lam_inf = model.lambda_inf
    safe = lam_inf - max(
        np.sqrt(lam_inf**2 + 1.0),
        pert.norm_s**s_star,
        corr.kato_b / (1.0 - corr.kato_a),
    )
    return SingularModel(model, pert, corr, safe - margin)
