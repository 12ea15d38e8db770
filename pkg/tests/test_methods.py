import numpy as np
import pytest

from cade.autodiff import Tensor, backward
from cade.continual import (
    BufferConfig,
    ImportanceMap,
    LossWeights,
    MethodSpec,
    ObjectiveContext,
    ad_loss,
    classification_loss,
    estimate_fisher,
    kd_loss,
    mas_importance,
    method_objective,
    psa_loss,
    quadratic_penalty,
)
from cade.autodiff import ParameterStore
from cade.model import ConvBlock, ModelConfig, init_model


def one_pixel_model(w0=0.8, w1=-0.3):
    """x -> logits [w0*x, w1*x] with all inner weights set to identity."""
    cfg = ModelConfig(conv_blocks=(ConvBlock(1, (1, 1), (1, 1)),),
                      activation="relu", tap_blocks=(0,), dense_width=1,
                      input_shape=(1, 1, 1))
    m = init_model(cfg, 0)
    m.params["conv0.w"].data = np.ones((1, 1, 1, 1))
    m.params["conv0.b"].data = np.zeros(1)
    m.params["fc.w"].data = np.ones((1, 1))
    m.params["fc.b"].data = np.zeros(1)
    m.params["out.w"].data = np.array([[w0, w1]])
    m.params["out.b"].data = np.zeros(2)
    return m


def softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


class TestFisher:
    def test_matches_logistic_hand_gradient(self):
        w0, w1, x, y = 0.8, -0.3, 1.7, 0
        m = one_pixel_model(w0, w1)
        data = np.full((1, 1, 1, 1), x)
        imap = estimate_fisher(m, data, labels=[y])
        p = softmax(np.array([w0 * x, w1 * x]))
        grad_w = (p - np.array([1.0, 0.0])) * x       # d nll / d out.w[0, :]
        grad_b = p - np.array([1.0, 0.0])
        assert np.allclose(imap.importance["out.w"], (grad_w ** 2)[None, :],
                           atol=1e-10)
        assert np.allclose(imap.importance["out.b"], grad_b ** 2, atol=1e-10)
        assert np.allclose(imap.anchor["out.w"], [[w0, w1]])

    def test_zero_model_head_weights_have_zero_fisher(self):
        m = one_pixel_model()
        for _, t in m.params.items():
            t.data = np.zeros_like(t.data)
        imap = estimate_fisher(m, np.ones((3, 1, 1, 1)), labels=[0, 1, 0])
        assert np.all(imap.importance["out.w"] == 0.0)
        assert np.all(imap.importance["out.b"] > 0.0)

    def test_nonnegative_and_deterministic_sampling(self):
        cfg = ModelConfig(conv_blocks=(ConvBlock(2, (3, 3), (2, 2)),),
                          tap_blocks=(0,), dense_width=4,
                          input_shape=(1, 4, 4))
        m = init_model(cfg, 1)
        data = np.random.default_rng(0).normal(size=(6, 1, 4, 4))
        a = estimate_fisher(m, data, rng=np.random.default_rng(9), n_samples=4)
        b = estimate_fisher(m, data, rng=np.random.default_rng(9), n_samples=4)
        for name, imp in a.importance.items():
            assert np.all(imp >= 0.0)
            assert np.array_equal(imp, b.importance[name])

    def test_rejections(self):
        m = one_pixel_model()
        with pytest.raises(ValueError, match="non-empty"):
            estimate_fisher(m, np.zeros((0, 1, 1, 1)), labels=[])
        with pytest.raises(ValueError, match="rng"):
            estimate_fisher(m, np.ones((1, 1, 1, 1)))


class TestMas:
    def test_matches_hand_gradient(self):
        w0, w1, x = 0.6, -1.1, 1.3
        m = one_pixel_model(w0, w1)
        imap = mas_importance(m, np.full((1, 1, 1, 1), x))
        # d ||z||^2 / d out.w[0, j] = 2 * z_j * x;  d / d b_j = 2 * z_j
        want_w = np.abs(2.0 * np.array([w0 * x, w1 * x]) * x)
        want_b = np.abs(2.0 * np.array([w0 * x, w1 * x]))
        assert np.allclose(imap.importance["out.w"], want_w[None, :], atol=1e-10)
        assert np.allclose(imap.importance["out.b"], want_b, atol=1e-10)

    def test_zero_model_gives_zero_importance(self):
        m = one_pixel_model()
        for _, t in m.params.items():
            t.data = np.zeros_like(t.data)
        imap = mas_importance(m, np.ones((2, 1, 1, 1)))
        assert all(np.all(v == 0.0) for v in imap.importance.values())


class TestQuadraticPenalty:
    def make(self, value, anchor, importance):
        params = ParameterStore()
        params.add("p", np.asarray(value))
        imap = ImportanceMap(importance={"p": np.asarray(importance)},
                             anchor={"p": np.asarray(anchor)})
        return params, imap

    def test_at_anchor_is_zero(self):
        params, imap = self.make([3.0, -1.0], [3.0, -1.0], [5.0, 7.0])
        assert float(quadratic_penalty(params, imap, 10.0).data) == 0.0

    def test_zero_importance_is_zero(self):
        params, imap = self.make([4.0], [1.0], [0.0])
        assert float(quadratic_penalty(params, imap, 10.0).data) == 0.0

    def test_hand_value_and_gradient(self):
        params, imap = self.make([4.0], [1.0], [2.0])
        pen = quadratic_penalty(params, imap, 1.0)
        assert abs(float(pen.data) - 9.0) <= 1e-15       # (1/2)*2*3^2
        g = backward(pen).named["p"]
        assert np.allclose(g, [6.0])                     # lam*imp*(p-a)

    def test_importance_validation(self):
        with pytest.raises(ValueError, match="non-negative"):
            ImportanceMap(importance={"p": np.array([-1.0])},
                          anchor={"p": np.array([0.0])})
        with pytest.raises(ValueError, match="name"):
            ImportanceMap(importance={"p": np.array([1.0])}, anchor={})

    def test_merged_sums_importance_keeps_new_anchor(self):
        a = ImportanceMap({"p": np.array([1.0])}, {"p": np.array([0.0])})
        b = ImportanceMap({"p": np.array([2.5])}, {"p": np.array([9.0])})
        m = a.merged_with(b)
        assert np.allclose(m.importance["p"], [3.5])
        assert np.allclose(m.anchor["p"], [9.0])


def context(teacher=False, importance=None, params=None):
    rng = np.random.default_rng(42)
    logits = Tensor(rng.normal(size=(4, 2)))
    labels = np.array([0, 1, 1, 0])
    taps = [("conv0", Tensor(rng.normal(size=(4, 6)))),
            ("fc", Tensor(rng.normal(size=(4, 3))))]
    ctx = ObjectiveContext(logits=logits, labels=labels, params=params,
                           importance=importance)
    if teacher:
        ctx.teacher_logits = rng.normal(size=(4, 2))
        ctx.taps = taps
        ctx.teacher_taps = [(tid, rng.normal(size=t.shape))
                            for tid, t in taps]
        ctx.maps = Tensor(rng.normal(size=(4, 8)))
        ctx.teacher_maps = rng.normal(size=(4, 8))
        ctx.positive_mask = labels == 1
    return ctx


class TestMethodSpec:
    def test_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            MethodSpec("sgd-only")

    def test_ewc_needs_lambda(self):
        with pytest.raises(ValueError, match="lambda"):
            MethodSpec("ewc", lam=0.0)

    def test_default_buffers(self):
        assert MethodSpec("replay").buffer_config() == BufferConfig()
        assert MethodSpec("cade").buffer_config() == BufferConfig()
        assert MethodSpec("finetune").buffer_config() is None
        assert MethodSpec("dfwf").buffer_config() is None
        custom = BufferConfig(64, "reservoir")
        assert MethodSpec("dfwf", buffer=custom).buffer_config() == custom


class TestMethodObjective:
    def test_finetune_is_classification(self):
        ctx = context()
        v = method_objective(MethodSpec("finetune"), ctx)
        want = classification_loss(ctx.logits, ctx.labels)
        assert float(v.data) == float(want.data)

    def test_distillation_without_teacher_reduces_to_classification(self):
        ctx = context(teacher=False)
        base = classification_loss(ctx.logits, ctx.labels)
        for name in ("lwf", "dfwf", "cade"):
            v = method_objective(MethodSpec(name), ctx)
            assert float(v.data) == float(base.data)

    def test_cade_zero_weights_equals_finetune_bit_exact(self):
        ctx = context(teacher=True)
        zero = MethodSpec("cade", weights=LossWeights(0.0, 0.0, 0.0))
        v = method_objective(zero, ctx)
        want = method_objective(MethodSpec("finetune"), ctx)
        assert v.data.tobytes() == want.data.tobytes()

    def test_lwf_composition(self):
        ctx = context(teacher=True)
        alpha = 0.7
        v = method_objective(
            MethodSpec("lwf", weights=LossWeights(alpha=alpha)), ctx)
        want = float(classification_loss(ctx.logits, ctx.labels).data) + \
            alpha * float(kd_loss(ctx.teacher_logits, ctx.logits).data)
        assert abs(float(v.data) - want) <= 1e-12

    def test_dfwf_gamma_zero_equals_lwf(self):
        ctx = context(teacher=True)
        w = LossWeights(alpha=0.9, gamma=0.0)
        a = method_objective(MethodSpec("dfwf", weights=w), ctx)
        b = method_objective(MethodSpec("lwf", weights=w), ctx)
        assert float(a.data) == float(b.data)

    def test_dfwf_uses_only_final_tap(self):
        ctx = context(teacher=True)
        w = LossWeights(alpha=0.3, gamma=0.8)
        v = method_objective(MethodSpec("dfwf", weights=w), ctx)
        base = float(classification_loss(ctx.logits, ctx.labels).data)
        l_kd = float(kd_loss(ctx.teacher_logits, ctx.logits).data)
        l_psa = float(psa_loss(ctx.teacher_taps[-1:], ctx.taps[-1:],
                               ctx.positive_mask).data)
        assert abs(float(v.data) - (base + 0.3 * l_kd + 0.8 * l_psa)) <= 1e-12
        # perturbing the non-final tap must not change the dfwf loss
        ctx.teacher_taps[0] = ("conv0", ctx.teacher_taps[0][1] + 100.0)
        v2 = method_objective(MethodSpec("dfwf", weights=w), ctx)
        assert float(v2.data) == float(v.data)

    def test_cade_composition(self):
        ctx = context(teacher=True)
        w = LossWeights(alpha=1.0, beta=0.1, gamma=0.5)
        v = method_objective(MethodSpec("cade", weights=w), ctx)
        want = float(classification_loss(ctx.logits, ctx.labels).data) \
            + w.alpha * float(kd_loss(ctx.teacher_logits, ctx.logits).data) \
            + w.beta * float(ad_loss(ctx.teacher_maps, ctx.maps).data) \
            + w.gamma * float(psa_loss(ctx.teacher_taps, ctx.taps,
                                       ctx.positive_mask).data)
        assert abs(float(v.data) - want) <= 1e-12

    def test_cade_missing_maps_rejected(self):
        ctx = context(teacher=True)
        ctx.maps = None
        with pytest.raises(ValueError, match="missing"):
            method_objective(MethodSpec("cade"), ctx)

    def test_penalty_methods(self):
        params = ParameterStore()
        params.add("p", np.array([2.0]))
        imap = ImportanceMap({"p": np.array([4.0])}, {"p": np.array([1.0])})
        for name in ("ewc", "mas"):
            ctx = context(importance=imap, params=params)
            v = method_objective(MethodSpec(name, lam=10.0), ctx)
            base = float(classification_loss(ctx.logits, ctx.labels).data)
            assert abs(float(v.data) - (base + 5.0 * 4.0)) <= 1e-12
            # no importance yet (first task): plain classification
            ctx0 = context()
            v0 = method_objective(MethodSpec(name, lam=10.0), ctx0)
            assert float(v0.data) == base

    def test_objective_gradient_reaches_student_logits(self):
        ctx = context(teacher=True)
        v = method_objective(MethodSpec("cade"), ctx)
        g = backward(v)
        assert np.all(np.isfinite(g.wrt(ctx.logits)))
        assert np.any(g.wrt(ctx.logits) != 0.0)
