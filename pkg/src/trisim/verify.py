"""Brute-force and analytic oracles for every algebraic claim the risk
machinery rests on, plus a quantified (never asserted-away) measurement of
the pointwise estimator's bias.

The bias suite enumerates every accepted label-and-point configuration of a
small discrete domain exactly, so the expected value of the estimator is
computed with no sampling error at all; Monte Carlo through the real
samplers then has to agree with the enumeration within standard error.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as scipy_stats

from .core import ClassPrior, CorrectionKind, EnumerationSizeError, LossSpec
from .evaluation import fraction_sweep
from .model import backward, forward, init_model
from .risk import (
    DiscreteDomainSpec,
    Thetas,
    compute_thetas,
    corrected_loss_u_vec,
    corrected_loss_us_vec,
    empirical_risk,
    empirical_risk_grad,
    matched_us_coefficients,
    reconstructed_risk_discrete,
    supervised_risk_discrete,
)
from .sampler import (
    DiscreteSource,
    GaussianSourceSpec,
    paper_case_weights,
    sample_triplets_paper_case,
    sample_triplets_rejection,
    sample_unlabeled,
)
from .trainer import TrainConfig

ENUMERATION_CAP = 8  # K^3 * 2^3 label-point configurations stay < 1e6


@dataclass(frozen=True)
class CheckRecord:
    name: str
    expected: float | None
    observed: float | None
    tolerance: float | None
    passed: bool
    assertable: bool = True


@dataclass
class VerifyReport:
    suite: str
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def assertable_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.assertable)

    def add(self, name, expected, observed, tolerance, passed=None, assertable=True):
        if passed is None:
            passed = abs(observed - expected) <= tolerance
        self.checks.append(
            CheckRecord(
                name=name,
                expected=None if expected is None else float(expected),
                observed=None if observed is None else float(observed),
                tolerance=None if tolerance is None else float(tolerance),
                passed=bool(passed),
                assertable=assertable,
            )
        )

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [vars(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "VerifyReport":
        report = cls(suite=d["suite"])
        for c in d["checks"]:
            report.checks.append(CheckRecord(**c))
        return report

    @staticmethod
    def merge(reports: list["VerifyReport"]) -> "VerifyReport":
        merged = VerifyReport(suite="all")
        for r in reports:
            for c in r.checks:
                merged.checks.append(replace(c, name=f"{r.suite}.{c.name}"))
        return merged


def default_prior_grid() -> list[float]:
    return [round(0.05 * k, 2) for k in range(1, 20) if abs(0.05 * k - 0.5) > 1e-9]


def check_theta_system(prior_grid: list[float] | None = None) -> VerifyReport:
    """Substitute the coefficients into the four matching equations; all
    residuals must vanish to machine precision."""
    report = VerifyReport(suite="thetas")
    for pi in prior_grid or default_prior_grid():
        prior = ClassPrior(pi)
        residual = max(abs(r) for r in theta_system_residuals(prior, compute_thetas(prior)))
        report.add(f"matching_residual_pi={pi}", 0.0, residual, 1e-12)
    return report


def theta_system_residuals(prior: ClassPrior, thetas: Thetas) -> tuple[float, float, float, float]:
    """Residuals of the four-equation system that pins down the mixing
    coefficients (weighted similarity term + prior-weighted unlabeled term
    must reproduce the prior-weighted per-label loss coefficients)."""
    pp, pm = prior.pi_plus, prior.pi_minus
    q = 1.0 - pp * pm
    w_plus = 2.0 * pp**2 / q
    w_minus = 2.0 * pm**2 / q
    return (
        w_plus * thetas.theta_us_plus + pp * thetas.theta_u_plus - pp,
        w_plus * thetas.theta_us_minus + pp * thetas.theta_u_minus - 0.0,
        w_minus * thetas.theta_us_plus + pm * thetas.theta_u_plus - 0.0,
        w_minus * thetas.theta_us_minus + pm * thetas.theta_u_minus - pm,
    )


def random_domain(rng: np.random.Generator, max_support: int = 8) -> DiscreteDomainSpec:
    k = int(rng.integers(1, max_support + 1))
    p_plus = rng.dirichlet(np.ones(k))
    p_minus = rng.dirichlet(np.ones(k))
    pi = float(rng.choice([0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]))
    scores = rng.uniform(-2.0, 2.0, size=k)
    return DiscreteDomainSpec(
        p_plus=p_plus, p_minus=p_minus, prior=ClassPrior(pi), scores=scores
    )


def check_risk_identity(n_trials: int = 100, seed: int = 0) -> VerifyReport:
    """Supervised risk vs its weak-supervision reconstruction on random
    discrete domains; the two are algebraically identical."""
    report = VerifyReport(suite="identity")
    rng = np.random.default_rng(seed)
    spec = LossSpec()
    worst = 0.0
    for _ in range(n_trials):
        domain = random_domain(rng)
        gap = abs(
            supervised_risk_discrete(domain, spec)
            - reconstructed_risk_discrete(domain, spec)
        )
        worst = max(worst, gap)
    report.add(f"max_reconstruction_gap_{n_trials}_trials", 0.0, worst, 1e-10)
    return report


def check_acceptance_rate(
    priors: list[float] | None = None, n_draws: int = 100_000, seed: int = 0
) -> VerifyReport:
    """Monte Carlo acceptance fraction of the rejection sampler against the
    closed form 1 - pi_plus*pi_minus, within 3 standard errors."""
    report = VerifyReport(suite="acceptance")
    for i, pi in enumerate(priors or [0.2, 0.4, 0.6]):
        prior = ClassPrior(pi)
        # featureless discrete domain: only the labels matter here
        source = DiscreteSource(np.array([1.0]), np.array([1.0]), prior)
        rng = np.random.default_rng([seed, i])
        _, stats = sample_triplets_rejection(source, n_draws, rng)
        p = 1.0 - prior.pi_plus * prior.pi_minus
        se = np.sqrt(p * (1.0 - p) / stats.n_raw)
        report.add(f"acceptance_rate_pi={pi}", p, stats.acceptance_rate, 3.0 * se)
    return report


def enumerate_estimator_expectation(
    domain: DiscreteDomainSpec, sampler_kind: str, spec: LossSpec
) -> tuple[float, float]:
    """Exact E[estimator] under the chosen sampler by full enumeration.

    Returns (expectation, total probability mass of the enumerated triplet
    configurations); the latter must be 1 up to rounding.
    """
    if domain.support_size > ENUMERATION_CAP:
        raise EnumerationSizeError(
            f"support size {domain.support_size} exceeds enumeration cap {ENUMERATION_CAP}"
        )
    prior = domain.prior
    thetas = compute_thetas(prior)
    lus = corrected_loss_us_vec(domain.scores, thetas, spec)
    lu = corrected_loss_u_vec(domain.scores, thetas, spec)
    k = domain.support_size
    cond = {1: domain.p_plus, -1: domain.p_minus}
    class_prob = {1: prior.pi_plus, -1: prior.pi_minus}
    # mean of the three pointwise losses, over all (k1, k2, k3)
    mean_loss = (
        lus[:, None, None] + lus[None, :, None] + lus[None, None, :]
    ) / 3.0

    total_prob = 0.0
    e_us = 0.0
    if sampler_kind == "rejection":
        p_accept = 1.0 - prior.pi_plus * prior.pi_minus
        for y1, y2, y3 in itertools.product((1, -1), repeat=3):
            if y2 == y3 != y1:
                continue
            label_prob = class_prob[y1] * class_prob[y2] * class_prob[y3] / p_accept
            point_prob = (
                cond[y1][:, None, None]
                * cond[y2][None, :, None]
                * cond[y3][None, None, :]
            )
            config = label_prob * point_prob
            total_prob += float(config.sum())
            e_us += float((config * mean_loss).sum())
    elif sampler_kind == "paper_case":
        weights = paper_case_weights(prior)
        marginal = domain.p_marginal
        tied_class = (1, -1, 1, -1)
        for case, w in enumerate(weights):
            tied = cond[tied_class[case]]
            config = (
                w
                * tied[:, None, None]
                * tied[None, :, None]
                * marginal[None, None, :]
            )
            total_prob += float(config.sum())
            e_us += float((config * mean_loss).sum())
    else:
        raise ValueError(f"unknown sampler kind {sampler_kind!r}")

    e_u = float(np.sum(domain.p_marginal * lu))
    return e_us + e_u, total_prob


def enumerate_position_expectations(
    domain: DiscreteDomainSpec, sampler_kind: str, values: np.ndarray
) -> tuple[float, float, float]:
    """Exact per-position expectations (anchor, first companion, second
    companion) of a pointwise function given by its values on the support,
    under the chosen sampler's triplet distribution."""
    if domain.support_size > ENUMERATION_CAP:
        raise EnumerationSizeError(
            f"support size {domain.support_size} exceeds enumeration cap {ENUMERATION_CAP}"
        )
    prior = domain.prior
    cond = {1: domain.p_plus, -1: domain.p_minus}
    class_prob = {1: prior.pi_plus, -1: prior.pi_minus}
    e_pos = np.zeros(3)
    if sampler_kind == "rejection":
        p_accept = 1.0 - prior.pi_plus * prior.pi_minus
        for labels in itertools.product((1, -1), repeat=3):
            y1, y2, y3 = labels
            if y2 == y3 != y1:
                continue
            label_prob = class_prob[y1] * class_prob[y2] * class_prob[y3] / p_accept
            for pos, y in enumerate(labels):
                e_pos[pos] += label_prob * float(np.sum(cond[y] * values))
        # the sampler swaps the two companions with probability 1/2
        e_pos[1] = e_pos[2] = 0.5 * (e_pos[1] + e_pos[2])
    elif sampler_kind == "paper_case":
        weights = paper_case_weights(prior)
        marginal = domain.p_marginal
        e_marginal = float(np.sum(marginal * values))
        tied_class = (1, -1, 1, -1)
        for case, w in enumerate(weights):
            e_tied = float(np.sum(cond[tied_class[case]] * values))
            e_pos[0] += w * e_tied
            # each companion is the tied partner or the marginal draw with
            # probability 1/2 (case choice plus the swap randomization)
            e_pos[1] += w * 0.5 * (e_tied + e_marginal)
            e_pos[2] += w * 0.5 * (e_tied + e_marginal)
    else:
        raise ValueError(f"unknown sampler kind {sampler_kind!r}")
    return float(e_pos[0]), float(e_pos[1]), float(e_pos[2])


def check_matched_calibration(n_trials: int = 50, seed: int = 0) -> VerifyReport:
    """The measure-matched similarity weighting must make the expected raw
    estimate equal the supervised risk exactly, for both samplers, on random
    discrete domains. This is the constructive counterpart of the bias
    suite: the plain pooled mean is biased, the matched combination is not."""
    report = VerifyReport(suite="matched")
    rng = np.random.default_rng(seed)
    spec = LossSpec()
    worst = {"rejection": 0.0, "paper_case": 0.0}
    for _ in range(n_trials):
        domain = random_domain(rng)
        thetas = compute_thetas(domain.prior)
        lus = corrected_loss_us_vec(domain.scores, thetas, spec)
        lu = corrected_loss_u_vec(domain.scores, thetas, spec)
        e_u = float(np.sum(domain.p_marginal * lu))
        e_us_marginal = float(np.sum(domain.p_marginal * lus))
        supervised = supervised_risk_discrete(domain, spec)
        for kind in worst:
            c_a, c_c, c_u = matched_us_coefficients(domain.prior, kind)
            e_a, e_c1, e_c2 = enumerate_position_expectations(domain, kind, lus)
            expected_raw = (
                c_a * e_a
                + 0.5 * c_c * (e_c1 + e_c2)
                + c_u * e_us_marginal
                + e_u
            )
            worst[kind] = max(worst[kind], abs(expected_raw - supervised))
    for kind, gap in worst.items():
        report.add(f"matched_raw_equals_supervised_{kind}", 0.0, gap, 1e-10)
    return report


def measure_estimator_bias(
    domain: DiscreteDomainSpec,
    sampler_kind: str = "rejection",
    n_mc: int = 50_000,
    seed: int = 0,
) -> VerifyReport:
    """Quantify E[estimator] - supervised risk.

    The bias is reported, never asserted to be zero: the pooled triplet
    measure the similarity-side average is taken under does not normalize,
    so sample-level unbiasedness is not an algebraic fact. The assertable
    parts are the enumeration's total probability and the Monte Carlo
    self-consistency.
    """
    spec = LossSpec()
    report = VerifyReport(suite="bias")
    expectation, total_prob = enumerate_estimator_expectation(domain, sampler_kind, spec)
    report.add("enumeration_total_probability", 1.0, total_prob, 1e-12)

    supervised = supervised_risk_discrete(domain, spec)
    report.add(
        "bias_delta",
        None,
        expectation - supervised,
        None,
        passed=True,
        assertable=False,
    )

    thetas = compute_thetas(domain.prior)
    source = DiscreteSource(domain.p_plus, domain.p_minus, domain.prior)
    rng = np.random.default_rng(seed)
    if sampler_kind == "rejection":
        triplets, _ = sample_triplets_rejection(source, n_mc, rng)
    else:
        triplets = sample_triplets_paper_case(source, n_mc, rng)
    idx = triplets[:, :, 0].astype(int)
    per_triplet = corrected_loss_us_vec(domain.scores[idx], thetas, spec).mean(axis=1)
    u_idx = sample_unlabeled(source, n_mc, rng)[:, 0].astype(int)
    per_u = corrected_loss_u_vec(domain.scores[u_idx], thetas, spec)
    mc = float(per_triplet.mean() + per_u.mean())
    se = float(
        np.sqrt(
            per_triplet.var(ddof=1) / n_mc + per_u.var(ddof=1) / n_mc
        )
    )
    report.add("mc_vs_enumeration", expectation, mc, 3.0 * se)
    return report


def constant_scorer_bias_closed_form(prior: ClassPrior, c: float, spec: LossSpec) -> float:
    """For a constant scorer both estimator terms collapse to the corrected
    losses at c, giving a sampler-independent closed form for the bias."""
    thetas = compute_thetas(prior)
    lp = (1.0 - c) ** 2
    lm = (1.0 + c) ** 2
    coeff_plus = thetas.theta_us_plus + thetas.theta_u_plus - prior.pi_plus
    coeff_minus = thetas.theta_us_minus + thetas.theta_u_minus - prior.pi_minus
    return coeff_plus * lp + coeff_minus * lm


def run_bias_suite(seed: int = 0, n_mc: int = 50_000) -> VerifyReport:
    """Standard bias measurements: constant-scorer enumeration against the
    closed form, then Monte Carlo self-consistency on a random support-4
    domain, for both sampler kinds."""
    spec = LossSpec()
    report = VerifyReport(suite="bias")
    prior = ClassPrior(0.4)
    for c in (0.0, 1.0, -0.5):
        domain = DiscreteDomainSpec(
            p_plus=np.array([0.7, 0.3]),
            p_minus=np.array([0.2, 0.8]),
            prior=prior,
            scores=np.array([c, c]),
        )
        closed = constant_scorer_bias_closed_form(prior, c, spec)
        for kind in ("rejection", "paper_case"):
            expectation, _ = enumerate_estimator_expectation(domain, kind, spec)
            delta = expectation - supervised_risk_discrete(domain, spec)
            report.add(f"constant_scorer_c={c}_{kind}", closed, delta, 1e-10)

    rng = np.random.default_rng(seed)
    domain = DiscreteDomainSpec(
        p_plus=rng.dirichlet(np.ones(4)),
        p_minus=rng.dirichlet(np.ones(4)),
        prior=prior,
        scores=rng.uniform(-2, 2, size=4),
    )
    for kind in ("rejection", "paper_case"):
        sub = measure_estimator_bias(domain, kind, n_mc=n_mc, seed=seed)
        for check in sub.checks:
            report.checks.append(replace(check, name=f"{kind}_{check.name}"))
    return report


def check_gradients(n_trials: int = 50, seed: int = 0) -> VerifyReport:
    """Analytic gradient of the corrected batch risk through the model vs
    central finite differences, away from correction and relu kinks."""
    report = VerifyReport(suite="gradients")
    rng = np.random.default_rng(seed)
    spec = LossSpec()
    corrections = list(CorrectionKind)
    trial = 0
    attempts = 0
    while trial < n_trials and attempts < 50 * n_trials:
        attempts += 1
        kind = "linear" if trial % 2 == 0 else "mlp"
        correction = corrections[trial % 3]
        dim = int(rng.integers(2, 5))
        hidden = int(rng.integers(3, 7))
        prior = ClassPrior(float(rng.choice([0.2, 0.3, 0.4, 0.6, 0.7, 0.8])))
        thetas = compute_thetas(prior)
        model = init_model(kind, dim, hidden, seed=int(rng.integers(1 << 31)))
        for p in model.params().values():
            p += 0.3 * rng.standard_normal(p.shape)
        x_us = rng.uniform(-1.5, 1.5, size=(int(rng.integers(3, 9)) * 3, dim))
        x_u = rng.uniform(-1.5, 1.5, size=(int(rng.integers(2, 7)), dim))
        # alternate between the plain estimator and a weighted similarity
        # term of the kind the matched trainer uses
        if trial % 2 == 1:
            us_weights = rng.uniform(-2.0, 3.0, size=x_us.shape[0])
            u_plus_coef = float(rng.uniform(-1.0, 1.0))
        else:
            us_weights, u_plus_coef = None, 0.0

        def risk_value() -> float:
            return empirical_risk(
                np.atleast_1d(forward(model, x_us)),
                np.atleast_1d(forward(model, x_u)),
                thetas,
                spec,
                correction,
                us_weights=us_weights,
                u_plus_coef=u_plus_coef,
            ).corrected

        raw = empirical_risk(
            np.atleast_1d(forward(model, x_us)),
            np.atleast_1d(forward(model, x_u)),
            thetas,
            spec,
            CorrectionKind.NONE,
            us_weights=us_weights,
            u_plus_coef=u_plus_coef,
        ).raw
        if correction is not CorrectionKind.NONE and abs(raw) < 1e-3:
            continue  # too close to the correction kink for finite differences
        if kind == "mlp":
            pre = np.concatenate([x_us, x_u]) @ model.w1.T + model.b1
            if np.min(np.abs(pre)) < 1e-4:
                continue  # relu kink

        g_us, g_u = empirical_risk_grad(
            np.atleast_1d(forward(model, x_us)),
            np.atleast_1d(forward(model, x_u)),
            thetas,
            spec,
            correction,
            us_weights=us_weights,
            u_plus_coef=u_plus_coef,
        )
        grads = backward(
            model, np.concatenate([x_us, x_u]), np.concatenate([g_us, g_u])
        )

        eps = 1e-5
        max_rel = 0.0
        for key, p in model.params().items():
            flat = p.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + eps
                up = risk_value()
                flat[j] = orig - eps
                down = risk_value()
                flat[j] = orig
                fd = (up - down) / (2 * eps)
                an = grads[key].ravel()[j]
                rel = abs(fd - an) / max(abs(fd), abs(an), 1e-4)
                max_rel = max(max_rel, rel)
        report.add(
            f"trial_{trial}_{kind}_{correction.value}", 0.0, max_rel, 1e-5
        )
        trial += 1
    return report


def check_error_trend(
    fractions: list[float] | None = None,
    seeds: list[int] | None = None,
    source_spec: GaussianSourceSpec | None = None,
    config: TrainConfig | None = None,
    n_us: int = 2000,
    n_u: int = 2000,
    shuffled_labels: bool = False,
) -> VerifyReport:
    """More data should not hurt: the mean accuracy at the full budget must
    reach the smallest-fraction mean, with a positive rank correlation
    between fraction and accuracy. With label-shuffled sources the trend is
    reported as non-informative instead."""
    fractions = sorted(fractions or [0.1, 0.25, 0.5, 1.0])
    seeds = seeds or [0, 1, 2, 3, 4]
    source_spec = source_spec or default_gaussian_spec()
    config = config or TrainConfig(prior=source_spec.prior)
    report = VerifyReport(suite="trend")
    sweep = fraction_sweep(
        fractions, seeds, source_spec, config, n_us, n_u, shuffled_labels=shuffled_labels
    )
    means = [row.mean for row in sweep.rows]
    if shuffled_labels:
        worst = max(abs(m - 0.5) for m in means)
        report.add("chance_level_control", 0.0, worst, 0.1)
        return report
    if len(fractions) == 1:
        report.add(
            "single_fraction_trivial", None, means[0], None, passed=True
        )
        return report
    report.add(
        "full_vs_smallest_fraction",
        means[0],
        means[-1],
        None,
        passed=means[-1] >= means[0],
    )
    rho = float(scipy_stats.spearmanr(fractions, means).statistic)
    report.add("spearman_rank_correlation", None, rho, None, passed=rho > 0)
    return report


def default_gaussian_spec(pi_plus: float = 0.4, separation: float = 4.0) -> GaussianSourceSpec:
    """2-D isotropic Gaussians with the requested mean separation in units
    of sigma."""
    return GaussianSourceSpec(
        dim=2,
        mu_plus=np.array([separation / 2.0, 0.0]),
        mu_minus=np.array([-separation / 2.0, 0.0]),
        sigma=1.0,
        prior=ClassPrior(pi_plus),
    )
