"""Risk machinery: mixing coefficients, corrected per-point losses, the
empirical risk estimator with its gradient, and the exact discrete-domain
reconstruction of the supervised risk.

The four coefficients (with w = pi_plus - pi_minus, q = 1 - pi_plus*pi_minus):

    theta_us_plus  =  q / (2w)        theta_us_minus = -q / (2w)
    theta_u_plus   = -2*pi_minus / (2w)
    theta_u_minus  =  2*pi_plus  / (2w)

They are the unique solution of the 4-equation matching system checked in
trisim.verify, and they make the weighted class-conditional expectation of
the corrected losses reproduce the supervised risk exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ClassPrior,
    CorrectionKind,
    InsufficientDataError,
    InvalidInputError,
    LossSpec,
    loss_grads,
    loss_values,
)


@dataclass(frozen=True)
class Thetas:
    theta_us_plus: float
    theta_us_minus: float
    theta_u_plus: float
    theta_u_minus: float


def compute_thetas(prior: ClassPrior) -> Thetas:
    """Mixing coefficients for the similarity-side and unlabeled-side
    corrected losses. Requires pi_plus != 0.5."""
    prior.require_non_degenerate()
    pp, pm = prior.pi_plus, prior.pi_minus
    q = 1.0 - pp * pm
    denom = 2.0 * (pp - pm)
    return Thetas(
        theta_us_plus=q / denom,
        theta_us_minus=q / -denom,
        theta_u_plus=-2.0 * pm / denom,
        theta_u_minus=-2.0 * pp / -denom,
    )


def similarity_mass(prior: ClassPrior) -> float:
    """Total mass of the unnormalized similarity-side measure,
    2*(pi_plus^2 + pi_minus^2) / (1 - pi_plus*pi_minus).

    The measure the reconstruction identity integrates against does not
    normalize (its mass exceeds 1 for every valid prior), so a plain sample
    mean over pooled triplet points systematically underweights the
    similarity term. This factor is the exact deficit.
    """
    prior.require_non_degenerate()
    pp, pm = prior.pi_plus, prior.pi_minus
    return 2.0 * (pp * pp + pm * pm) / (1.0 - pp * pm)


def matched_us_coefficients(prior: ClassPrior, sampler_kind: str) -> tuple[float, float, float]:
    """Coefficients (c_anchor, c_companion, c_unlabeled) that make the
    similarity-side estimate

        c_anchor * mean_anchors(l_us)
        + c_companion * mean_companions(l_us)
        + c_unlabeled * mean_unlabeled(l_us)

    an exactly unbiased estimate of the unnormalized similarity integral
    w_plus*E_{P+}[l_us] + w_minus*E_{P-}[l_us], for data drawn by the named
    sampler.

    The derivation uses only the known position marginals of each sampler:
    under the rejection sampler the anchor marginal is
    [pi+^2(1+pi-) P+ + pi-^2(1+pi+) P-] / (1 - pi+pi-) and both companions
    are marginal-P draws; under the four-case sampler the anchor is always a
    tied-pair member (marginal proportional to pi+^2 P+ + pi-^2 P-) and each
    companion is an even mixture of that measure and P. Solving the
    resulting linear systems gives closed forms; trisim.verify checks the
    resulting expectation against the reconstruction integral by exact
    enumeration.
    """
    prior.require_non_degenerate()
    pp, pm = prior.pi_plus, prior.pi_minus
    denom = 1.0 - pp * pm
    if sampler_kind == "rejection":
        return 2.0, 0.0, -2.0 * pp * pm / denom
    if sampler_kind == "paper_case":
        mu = similarity_mass(prior)
        return mu / 2.0, mu, -mu / 2.0
    raise InvalidInputError(f"unknown sampler kind {sampler_kind!r}")


def matched_point_weights(prior: ClassPrior, sampler_kind: str, n_triplets: int) -> tuple[np.ndarray, float]:
    """Per-point weights for the disassembled (3n,) similarity pool, in
    (anchor, companion, companion) order per triplet, plus the coefficient
    applied to the unlabeled pool's mean similarity loss.

    The weights are scaled so that mean(weights * l_us) over the pooled
    points equals c_anchor*mean_anchors + c_companion*mean_companions.
    """
    c_a, c_c, c_u = matched_us_coefficients(prior, sampler_kind)
    per_triplet = np.array([3.0 * c_a, 1.5 * c_c, 1.5 * c_c])
    return np.tile(per_triplet, n_triplets), c_u


def corrected_loss_us(score: float, thetas: Thetas, spec: LossSpec) -> float:
    """Similarity-side corrected loss; a linear combination of the two
    per-label losses, possibly negative."""
    return float(
        thetas.theta_us_plus * loss_values(spec, score, 1)
        + thetas.theta_us_minus * loss_values(spec, score, -1)
    )


def corrected_loss_u(score: float, thetas: Thetas, spec: LossSpec) -> float:
    """Unlabeled-side corrected loss."""
    return float(
        thetas.theta_u_plus * loss_values(spec, score, 1)
        + thetas.theta_u_minus * loss_values(spec, score, -1)
    )


def corrected_loss_us_vec(scores: np.ndarray, thetas: Thetas, spec: LossSpec) -> np.ndarray:
    return thetas.theta_us_plus * loss_values(spec, scores, 1) + (
        thetas.theta_us_minus * loss_values(spec, scores, -1)
    )


def corrected_loss_u_vec(scores: np.ndarray, thetas: Thetas, spec: LossSpec) -> np.ndarray:
    return thetas.theta_u_plus * loss_values(spec, scores, 1) + (
        thetas.theta_u_minus * loss_values(spec, scores, -1)
    )


def corrected_loss_us_grad_vec(scores: np.ndarray, thetas: Thetas, spec: LossSpec) -> np.ndarray:
    return thetas.theta_us_plus * loss_grads(spec, scores, 1) + (
        thetas.theta_us_minus * loss_grads(spec, scores, -1)
    )


def corrected_loss_u_grad_vec(scores: np.ndarray, thetas: Thetas, spec: LossSpec) -> np.ndarray:
    return thetas.theta_u_plus * loss_grads(spec, scores, 1) + (
        thetas.theta_u_minus * loss_grads(spec, scores, -1)
    )


@dataclass(frozen=True)
class RiskValue:
    """Evaluated risk estimate: the two side means, their sum, and the
    corrected value g(raw)."""

    us_term: float
    u_term: float
    raw: float
    corrected: float


def _check_scores(scores, side: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{side} scores must be a 1-D array")
    if arr.size == 0:
        raise InsufficientDataError(f"{side} score list is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{side} scores contain non-finite values")
    return arr


def _check_weights(us_weights, n: int) -> np.ndarray | None:
    if us_weights is None:
        return None
    w = np.asarray(us_weights, dtype=float)
    if w.shape != (n,):
        raise InvalidInputError(
            f"us_weights must match the similarity score count {n}, got shape {w.shape}"
        )
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("us_weights contain non-finite values")
    return w


def empirical_risk(
    us_scores,
    u_scores,
    thetas: Thetas,
    spec: LossSpec,
    correction: CorrectionKind,
    us_weights=None,
    u_plus_coef: float = 0.0,
) -> RiskValue:
    """Mean corrected loss on each side, summed, then passed through g.

    With the default arguments both sides are plain sample means. Optional
    per-point similarity weights and a coefficient on the unlabeled pool's
    mean similarity loss support the measure-matched estimate the trainer
    uses (see matched_point_weights); those extra pieces are folded into
    us_term.
    """
    us = _check_scores(us_scores, "similarity")
    u = _check_scores(u_scores, "unlabeled")
    w = _check_weights(us_weights, us.size)
    lus = corrected_loss_us_vec(us, thetas, spec)
    us_term = float(np.mean(lus if w is None else w * lus))
    if u_plus_coef:
        us_term += u_plus_coef * float(np.mean(corrected_loss_us_vec(u, thetas, spec)))
    u_term = float(np.mean(corrected_loss_u_vec(u, thetas, spec)))
    raw = us_term + u_term
    return RiskValue(us_term=us_term, u_term=u_term, raw=raw, corrected=correction.apply(raw))


def empirical_risk_grad(
    us_scores,
    u_scores,
    thetas: Thetas,
    spec: LossSpec,
    correction: CorrectionKind,
    us_weights=None,
    u_plus_coef: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """d corrected / d score for every input score.

    The raw estimate is linear in the per-point corrected losses, so each
    per-score derivative is the (weighted) per-point loss derivative divided
    by its side's count, scaled by dg/d raw (0 at the raw = 0 kink).
    """
    us = _check_scores(us_scores, "similarity")
    u = _check_scores(u_scores, "unlabeled")
    w = _check_weights(us_weights, us.size)
    lus = corrected_loss_us_vec(us, thetas, spec)
    us_term = float(np.mean(lus if w is None else w * lus))
    if u_plus_coef:
        us_term += u_plus_coef * float(np.mean(corrected_loss_us_vec(u, thetas, spec)))
    u_term = float(np.mean(corrected_loss_u_vec(u, thetas, spec)))
    factor = correction.grad_factor(us_term + u_term)
    dus = corrected_loss_us_grad_vec(us, thetas, spec)
    g_us = factor / us.size * (dus if w is None else w * dus)
    du = corrected_loss_u_grad_vec(u, thetas, spec)
    if u_plus_coef:
        du = du + u_plus_coef * corrected_loss_us_grad_vec(u, thetas, spec)
    g_u = factor / u.size * du
    return g_us, g_u


@dataclass(frozen=True)
class DiscreteDomainSpec:
    """A finite instance space: class-conditional pmfs over K support points
    plus the scorer's value at each point. Small enough domains make every
    expectation an exact sum, which is where the algebraic identities below
    can be checked to machine precision."""

    p_plus: np.ndarray
    p_minus: np.ndarray
    prior: ClassPrior
    scores: np.ndarray

    def __post_init__(self):
        pp = np.asarray(self.p_plus, dtype=float)
        pm = np.asarray(self.p_minus, dtype=float)
        f = np.asarray(self.scores, dtype=float)
        if not (pp.ndim == pm.ndim == f.ndim == 1) or not (pp.size == pm.size == f.size):
            raise InvalidInputError("p_plus, p_minus, scores must be 1-D of equal length")
        for name, v in (("p_plus", pp), ("p_minus", pm)):
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
                raise InvalidInputError(f"{name} must be a probability vector summing to 1")
        if not np.all(np.isfinite(f)):
            raise InvalidInputError("scores must be finite")
        object.__setattr__(self, "p_plus", pp)
        object.__setattr__(self, "p_minus", pm)
        object.__setattr__(self, "scores", f)

    @property
    def support_size(self) -> int:
        return self.scores.size

    @property
    def p_marginal(self) -> np.ndarray:
        return self.prior.pi_plus * self.p_plus + self.prior.pi_minus * self.p_minus


def supervised_risk_discrete(domain: DiscreteDomainSpec, spec: LossSpec) -> float:
    """Prior-weighted class-conditional expectation of the per-label losses,
    taken as an exact sum over the support."""
    pos = float(np.sum(domain.p_plus * loss_values(spec, domain.scores, 1)))
    neg = float(np.sum(domain.p_minus * loss_values(spec, domain.scores, -1)))
    return domain.prior.pi_plus * pos + domain.prior.pi_minus * neg


def reconstructed_risk_discrete(domain: DiscreteDomainSpec, spec: LossSpec) -> float:
    """The weak-supervision risk rebuilt from corrected losses.

    Expands both side expectations into weighted class-conditional sums:

        w_plus  * E_{P+}[l_us] + w_minus * E_{P-}[l_us]
        + pi_plus * E_{P+}[l_u] + pi_minus * E_{P-}[l_u]

    with w_± = 2*pi_±^2 / (1 - pi_plus*pi_minus). Equal to the supervised
    risk for every valid domain; trisim.verify property-tests the identity.
    """
    prior = domain.prior
    thetas = compute_thetas(prior)
    q = 1.0 - prior.pi_plus * prior.pi_minus
    w_plus = 2.0 * prior.pi_plus**2 / q
    w_minus = 2.0 * prior.pi_minus**2 / q
    lus = corrected_loss_us_vec(domain.scores, thetas, spec)
    lu = corrected_loss_u_vec(domain.scores, thetas, spec)
    e_us = w_plus * np.sum(domain.p_plus * lus) + w_minus * np.sum(domain.p_minus * lus)
    e_u = prior.pi_plus * np.sum(domain.p_plus * lu) + prior.pi_minus * np.sum(domain.p_minus * lu)
    return float(e_us + e_u)
