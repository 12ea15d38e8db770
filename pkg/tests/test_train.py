"""Sequential-trainer behavior on small deterministic streams.

Statistical claims about the default-scale stream (forgetting magnitude,
method ordering) live in the acceptance suite; here every assertion is
mechanical: counters, shapes, determinism, freezing, and error paths.
"""

import numpy as np
import pytest

from cade.autodiff import Optimizer, OptimizerConfig
from cade.continual import BufferConfig, LossWeights, MethodSpec
from cade.features import StreamConfig, default_families, synth_task_stream
from cade.model import ConvBlock, ModelConfig, init_model, snapshot
from cade.train import RunConfig, run_sequential
from cade.train.loop import _train_on

SMALL_MODEL = ModelConfig(conv_blocks=(ConvBlock(4), ConvBlock(8)),
                          tap_blocks=(0, 1), gradcam_layer=1,
                          dense_width=16, input_shape=(1, 20, 8))

# 8 frames at the default LFCC settings
_CLIP = 2304


def small_stream(n_tasks, seed=11):
    cfg = StreamConfig(clip_samples=_CLIP, train_per_task=24,
                       eval_per_task=12, tasks=default_families()[:n_tasks])
    return synth_task_stream(cfg, seed)


@pytest.fixture(scope="module")
def stream1():
    return small_stream(1)


@pytest.fixture(scope="module")
def stream2():
    return small_stream(2)


def run_cfg(name, epochs=2, seed=5, **kw):
    return RunConfig(method=MethodSpec(name, **kw), epochs=epochs,
                     batch_size=8, model=SMALL_MODEL, seed=seed)


class TestRunConfig:
    def test_bad_epochs_rejected(self):
        with pytest.raises(ValueError, match="epochs"):
            RunConfig(method=MethodSpec("finetune"), epochs=0)

    def test_bad_replay_fraction_rejected(self):
        with pytest.raises(ValueError, match="replay_fraction"):
            RunConfig(method=MethodSpec("replay"), replay_fraction=1.0)

    def test_memory_reflects_buffer_config(self):
        assert run_cfg("cade").memory() == 500
        assert run_cfg("finetune").memory() == 0
        assert run_cfg("replay", buffer=BufferConfig(64)).memory() == 64


class TestSequentialShape:
    def test_rows_lengths_and_counters(self, stream2):
        rep = run_sequential(run_cfg("cade",
                                     buffer=BufferConfig(16)), stream2)
        assert [len(r) for r in rep.per_task_eer] == [1, 2]
        assert rep.method == "cade"
        assert rep.memory == 16
        assert rep.seed == 5
        assert rep.fingerprint == stream2.fingerprint
        assert rep.wall_ms > 0.0
        assert rep.counters["teacher_snapshots"] == 1
        assert rep.counters["buffer_inserts"] == 2
        assert rep.counters["consolidations"] == 0
        # task 1: ceil(24/8)=3 steps per epoch; task 2 mixes 6 new + 2
        # replay per batch: ceil(24/6)=4 steps per epoch, 2 epochs each
        assert rep.counters["steps"] == 2 * 3 + 2 * 4
        assert rep.counters["buffer_draws"] == 2 * 2 * 4

    def test_all_eers_in_range(self, stream2):
        rep = run_sequential(run_cfg("replay"), stream2)
        for row in rep.per_task_eer:
            assert all(0.0 <= v <= 1.0 for v in row)
        assert 0.0 <= rep.final_eer <= 1.0

    def test_empty_stream_rejected(self, stream1):
        from cade.features import TaskStream
        empty = TaskStream([], stream1.fingerprint)
        with pytest.raises(ValueError, match="no tasks"):
            run_sequential(run_cfg("finetune"), empty)


class TestJoint:
    def test_ignores_continual_machinery(self, stream2):
        rep = run_sequential(run_cfg("joint"), stream2)
        assert rep.counters["teacher_snapshots"] == 0
        assert rep.counters["buffer_inserts"] == 0
        assert rep.counters["buffer_draws"] == 0
        assert rep.counters["consolidations"] == 0
        assert len(rep.per_task_eer) == 1
        assert len(rep.per_task_eer[0]) == 2
        assert rep.memory == 0
        # epochs scale with task count so the union pass matches the
        # sample presentations of a sequential run
        assert rep.counters["steps"] == 2 * 2 * 6


class TestSingleTaskEquivalences:
    def test_cade_zero_weights_matches_finetune(self, stream1):
        base = run_sequential(run_cfg("finetune", epochs=3), stream1)
        zero = run_cfg("cade", epochs=3, weights=LossWeights(0.0, 0.0, 0.0))
        got = run_sequential(zero, stream1)
        assert got.per_task_eer == base.per_task_eer
        assert got.final_eer == base.final_eer

    def test_distill_methods_train_without_teacher_on_task_one(self, stream1):
        for name in ("lwf", "dfwf"):
            rep = run_sequential(run_cfg(name), stream1)
            assert rep.counters["teacher_snapshots"] == 0


class TestDeterminism:
    def test_identical_seed_bit_identical(self, stream2):
        a = run_sequential(run_cfg("cade"), stream2)
        b = run_sequential(run_cfg("cade"), stream2)
        assert a.per_task_eer == b.per_task_eer
        assert a.final_eer == b.final_eer
        assert a.counters == b.counters

    def test_different_seed_changes_something(self, stream2):
        a = run_sequential(run_cfg("cade", seed=5), stream2)
        b = run_sequential(run_cfg("cade", seed=6), stream2)
        assert (a.per_task_eer != b.per_task_eer
                or a.final_eer != b.final_eer)


class TestTeacherFreeze:
    def test_teacher_checksum_constant_through_training(self, stream2):
        cfg = run_cfg("cade")
        model = init_model(SMALL_MODEL, 3)
        teacher = snapshot(model)
        before = teacher.params.checksum()
        counters = {"steps": 0, "buffer_draws": 0}
        _train_on(model, Optimizer(cfg.optimizer), cfg,
                  stream2.tasks[0].train, None, teacher, None,
                  np.random.default_rng(1), np.random.default_rng(2),
                  counters)
        assert teacher.params.checksum() == before
        assert model.params.checksum() != before
        assert counters["steps"] > 0


class TestAbort:
    def test_divergence_reports_step_index(self, stream1):
        cfg = RunConfig(method=MethodSpec("finetune"), epochs=1,
                        batch_size=8, model=SMALL_MODEL, seed=5,
                        optimizer=OptimizerConfig(kind="sgd", lr=1e200))
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(ValueError, match="aborted at step"):
                run_sequential(cfg, stream1)


class TestMethodIntegration:
    def test_ewc_consolidates_each_task(self, stream2):
        rep = run_sequential(run_cfg("ewc", epochs=1), stream2)
        assert rep.counters["consolidations"] == 2
        assert rep.counters["buffer_inserts"] == 0

    def test_mas_consolidates_each_task(self, stream2):
        rep = run_sequential(run_cfg("mas", epochs=1,
                                     lam=10.0), stream2)
        assert rep.counters["consolidations"] == 2

    def test_dfwf_uses_teacher_but_no_buffer(self, stream2):
        rep = run_sequential(run_cfg("dfwf", epochs=1), stream2)
        assert rep.counters["teacher_snapshots"] == 1
        assert rep.counters["buffer_inserts"] == 0
        assert rep.counters["buffer_draws"] == 0

    @pytest.mark.parametrize("strategy", ["reservoir", "ring-buffer",
                                          "mean-of-feature"])
    def test_buffer_strategies_through_trainer(self, stream2, strategy):
        cfg = run_cfg("replay", epochs=1,
                      buffer=BufferConfig(16, strategy))
        rep = run_sequential(cfg, stream2)
        assert rep.counters["buffer_inserts"] == 2
        assert rep.counters["buffer_draws"] > 0
