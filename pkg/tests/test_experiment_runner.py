import pytest

from aiin_gan_evaluator.errors import ParameterError, StageError
from aiin_gan_evaluator.eval_harness import ClassifierConfig
from aiin_gan_evaluator.experiment_runner import (
    BASELINE_TAG,
    ROW_FIELDS,
    ExperimentPlan,
    ExperimentRow,
    ExperimentRunner,
    Variant,
    build_study_data,
    cross_variants,
    rank_variants,
    run_experiment
)
from aiin_gan_evaluator.gan_trainer import GanConfig, constant_generator
from aiin_gan_evaluator.toy_data import ToyDatasetSpec


def tiny_plan(**overrides) -> ExperimentPlan:
    settings = dict(
        toy=ToyDatasetSpec(k_modes=4, side=16, n=20),
        gan=GanConfig(latent_dim=8, gen_hidden=(16,), disc_hidden=(16,), epochs=1),
        classifier=ClassifierConfig(hidden=4, epochs=1, batch_size=16),
        seed=5
    )
    settings.update(overrides)
    return ExperimentPlan(**settings)


def row(tag, delta, fid, batch=134) -> ExperimentRow:
    return ExperimentRow(tag, batch, None, None, delta, fid, None, None, None, None)


class TestCollapseDetection:
    def test_constant_generator_collapses(self):
        plan = tiny_plan(run_classifier=False)
        result = run_experiment(Variant("none", 5), plan, constant_generator(50.0, latent_dim=8, side=16))
        assert result.msssim_delta > 0.0
        assert result.fid > 0.0
        assert result.accuracy is None

    def test_constant_generator_after_aiin(self):
        plan = tiny_plan(run_classifier=False)
        result = run_experiment(Variant("aiin:2x2:50", 5), plan, constant_generator(50.0, latent_dim=8, side=16))
        assert result.augmentation == "aiin"
        assert result.window == "2x2"
        assert result.threshold == 50
        assert result.msssim_delta > 0.0


class TestExperimentRunner:
    def test_row_layout(self):
        result = ExperimentRunner(tiny_plan()).run(Variant("none", 5))
        assert result._fields == ROW_FIELDS
        assert result.augmentation == "none"
        assert result.batch_size == 5
        assert result.window is None
        assert 0.0 <= result.specificity <= 1.0

    def test_deterministic(self):
        first = ExperimentRunner(tiny_plan()).run(Variant("median:3", 5))
        second = ExperimentRunner(tiny_plan()).run(Variant("median:3", 5))
        assert first == second

    def test_baseline(self):
        result = ExperimentRunner(tiny_plan()).baseline()
        assert result.augmentation == BASELINE_TAG
        assert result.msssim_delta is None
        assert result.fid is None
        assert result.accuracy is not None

    def test_sweep_writes_histories(self, tmp_path):
        runner = ExperimentRunner(tiny_plan(), output_folder=tmp_path)
        rows = runner.sweep(cross_variants(["none"], [5, 10]), include_baseline=True)
        assert [r.augmentation for r in rows] == [BASELINE_TAG, "none", "none"]
        assert [r.batch_size for r in rows] == [None, 5, 10]
        assert set(runner.histories) == {"none_b5", "none_b10"}
        assert (tmp_path / "history_none_b5.csv").is_file()

    def test_study_data_shapes(self):
        data = build_study_data(tiny_plan())
        assert len(data.minority) == 20
        assert len(data.majority) == 58
        assert data.test.class_counts() == (2, 3)

    def test_preprocess_stage_error(self):
        with pytest.raises(StageError) as caught:
            ExperimentRunner(tiny_plan()).run(Variant("aiin:64x64:50", 5))
        assert caught.value.stage == "preprocess"
        assert caught.value.exit_code == 1

    def test_training_stage_error(self):
        with pytest.raises(StageError) as caught:
            ExperimentRunner(tiny_plan()).run(Variant("none", 50))
        assert caught.value.stage == "train-gan"
        assert "train-gan" in str(caught.value)

    @pytest.mark.slow
    def test_desk_scale_run(self):
        plan = ExperimentPlan(gan=GanConfig(epochs=20), classifier=ClassifierConfig(epochs=10))
        rows = ExperimentRunner(plan).sweep(cross_variants(["none", "aiin:8x8:50"], [134]))
        assert len(rows) == 2
        assert all(r.fid >= 0.0 for r in rows)


class TestVariants:
    def test_cross_product_order(self):
        variants = cross_variants(["none", "aiin:8x8:50"], [20, 134])
        assert [(v.preprocessing, v.batch_size) for v in variants] == [
            ("none", 20), ("none", 134), ("aiin:8x8:50", 20), ("aiin:8x8:50", 134)
        ]

    def test_label(self):
        assert Variant("aiin:8x8:50", 134).label == "aiin-8x8-50_b134"

    def test_empty_sweep(self):
        with pytest.raises(ParameterError):
            cross_variants([], [134])


class TestRankVariants:
    def test_order(self):
        rows = [row("a", 0.03, 1.0), row("b", -0.01, 3.0), row("c", -0.01, 2.0), row("d", 0.0, 0.5)]
        assert [r.augmentation for r in rank_variants(rows, 3)] == ["c", "b", "d"]

    def test_baseline_excluded(self):
        rows = [row(BASELINE_TAG, None, None, batch=None), row("a", 0.1, 1.0)]
        assert [r.augmentation for r in rank_variants(rows, 5)] == ["a"]

    def test_bad_k(self):
        with pytest.raises(ParameterError):
            rank_variants([], 0)
