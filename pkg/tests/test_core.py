"""Unit tests for the shared vocabulary: priors, losses, corrections, and
data containers."""
import numpy as np
import pytest

from trisim.core import (
    ClassPrior,
    CorrectionKind,
    DegeneratePriorError,
    InvalidInputError,
    LabeledPool,
    LossSpec,
    ShapeError,
    UncertainTriplet,
    WeakDataset,
    loss_grad,
    loss_grads,
    loss_value,
    loss_values,
)


class TestClassPrior:
    def test_pi_minus_complements(self):
        assert ClassPrior(0.4).pi_minus == pytest.approx(0.6)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.1, float("nan")])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(InvalidInputError):
            ClassPrior(bad)

    def test_balanced_prior_is_degenerate(self):
        with pytest.raises(DegeneratePriorError):
            ClassPrior(0.5).require_non_degenerate()

    def test_unbalanced_prior_is_fine(self):
        ClassPrior(0.4).require_non_degenerate()


class TestSquareLoss:
    def test_pinned_values(self):
        spec = LossSpec()
        assert loss_value(spec, 0.0, 1) == pytest.approx(1.0)
        assert loss_value(spec, 1.0, 1) == pytest.approx(0.0)
        assert loss_value(spec, 1.0, -1) == pytest.approx(4.0)
        assert loss_value(spec, -0.5, -1) == pytest.approx(0.25)

    def test_gradient_matches_finite_difference(self):
        spec = LossSpec()
        rng = np.random.default_rng(0)
        eps = 1e-6
        for _ in range(20):
            z = float(rng.uniform(-2, 2))
            y = int(rng.choice([1, -1]))
            fd = (loss_value(spec, z + eps, y) - loss_value(spec, z - eps, y)) / (2 * eps)
            assert loss_grad(spec, z, y) == pytest.approx(fd, abs=1e-6)

    def test_vectorized_agrees_with_scalar(self):
        spec = LossSpec()
        z = np.array([-1.5, 0.0, 0.7, 2.0])
        for y in (1, -1):
            np.testing.assert_allclose(
                loss_values(spec, z, y), [loss_value(spec, v, y) for v in z]
            )
            np.testing.assert_allclose(
                loss_grads(spec, z, y), [loss_grad(spec, v, y) for v in z]
            )

    def test_rejects_bad_label(self):
        with pytest.raises(InvalidInputError):
            loss_value(LossSpec(), 0.0, 0)

    def test_rejects_non_finite_score(self):
        with pytest.raises(InvalidInputError):
            loss_value(LossSpec(), float("inf"), 1)

    def test_bound_metadata_validation(self):
        LossSpec(lipschitz_bound=6.0, value_bound=9.0)
        with pytest.raises(InvalidInputError):
            LossSpec(lipschitz_bound=-1.0)


class TestCorrectionKind:
    def test_apply(self):
        assert CorrectionKind.NONE.apply(-2.5) == -2.5
        assert CorrectionKind.MAX_ZERO.apply(-2.5) == 0.0
        assert CorrectionKind.MAX_ZERO.apply(1.5) == 1.5
        assert CorrectionKind.ABS.apply(-2.5) == 2.5
        assert CorrectionKind.ABS.apply(1.5) == 1.5

    def test_grad_factor(self):
        assert CorrectionKind.NONE.grad_factor(-1.0) == 1.0
        assert CorrectionKind.MAX_ZERO.grad_factor(-1.0) == 0.0
        assert CorrectionKind.MAX_ZERO.grad_factor(1.0) == 1.0
        assert CorrectionKind.ABS.grad_factor(-1.0) == -1.0
        assert CorrectionKind.ABS.grad_factor(1.0) == 1.0

    def test_subgradient_at_kink_is_zero(self):
        assert CorrectionKind.MAX_ZERO.grad_factor(0.0) == 0.0
        assert CorrectionKind.ABS.grad_factor(0.0) == 0.0

    def test_string_round_trip(self):
        for kind in CorrectionKind:
            assert CorrectionKind(kind.value) is kind


class TestContainers:
    def test_triplet_requires_matching_shapes(self):
        with pytest.raises(ShapeError):
            UncertainTriplet(
                anchor=np.zeros(2), companion_a=np.zeros(3), companion_b=np.zeros(2)
            )

    def test_triplet_as_array(self):
        t = UncertainTriplet(np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0, 6.0]))
        assert t.as_array().shape == (3, 2)

    def test_weak_dataset_shapes(self):
        data = WeakDataset(
            triplets=np.zeros((4, 3, 2)),
            unlabeled=np.zeros((7, 2)),
            prior=ClassPrior(0.4),
        )
        assert data.n_triplets == 4
        assert data.n_unlabeled == 7
        assert data.sampler_kind == "rejection"

    def test_weak_dataset_rejects_dim_mismatch(self):
        with pytest.raises(ShapeError):
            WeakDataset(
                triplets=np.zeros((4, 3, 2)),
                unlabeled=np.zeros((7, 3)),
                prior=ClassPrior(0.4),
            )

    def test_weak_dataset_rejects_unknown_sampler(self):
        with pytest.raises(InvalidInputError):
            WeakDataset(
                triplets=np.zeros((1, 3, 2)),
                unlabeled=np.zeros((1, 2)),
                prior=ClassPrior(0.4),
                sampler_kind="mystery",
            )

    def test_labeled_pool_validates_labels(self):
        with pytest.raises(InvalidInputError):
            LabeledPool(x=np.zeros((2, 1)), y=np.array([1, 0]))

    def test_labeled_pool_empirical_prior(self):
        pool = LabeledPool(x=np.zeros((4, 1)), y=np.array([1, 1, 1, -1]))
        assert pool.empirical_prior.pi_plus == pytest.approx(0.75)
