import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fxsvm.datasets import Dataset
from fxsvm.quant import QGrid
from fxsvm.svm_fixed import (PrecisionConfig, classify_fx, decision_fx, effective_update, mismatch_mc,
                             predict_fx, quantize_inputs, quantize_model, train_fx)
from fxsvm.svm_float import Model, TrainConfig, classify, predict, train


def one(x, y=1):
    return Dataset(np.array([x], dtype=float), np.array([y]), "one")


class TestPrecisionConfig:
    def test_parse(self):
        assert PrecisionConfig.parse("6,5,10") == PrecisionConfig(6, 5, 10)
        assert PrecisionConfig.parse("6,5").b_w is None
        with pytest.raises(ValueError):
            PrecisionConfig.parse("6")
        with pytest.raises(ValueError):
            PrecisionConfig(0, 5)
        with pytest.raises(ValueError):
            PrecisionConfig(5, 41)

    def test_steps(self):
        pc = PrecisionConfig(5, 6, 10)
        assert (pc.delta_x, pc.delta_f, pc.lsb_w) == (2**-4, 2**-5, 2**-9)


class TestClassifyFx:
    def test_wide_equals_float(self):
        rng = np.random.default_rng(2)
        pc = PrecisionConfig(40, 40)
        for _ in range(200):
            m = Model(rng.normal(size=3), rng.normal() * 0.3)
            x = rng.uniform(-1, 1, 3)
            if abs(m.decision(x)) > 1e-9:
                assert classify_fx(m, x, pc) == classify(m, x)

    def test_input_rounding(self):
        # 0.6 -> 0.5 on the 2-bit grid
        assert quantize_inputs([0.6, 0.0], 2).tolist() == [0.5, 0.0]
        assert classify_fx(Model([1, 0], 0), [0.6, 0], PrecisionConfig(2, 8)) == 1

    def test_coefficient_rounding_mismatch(self):
        m = Model([0.1, 0], -0.04)
        assert classify(m, [0.3, 0]) == -1
        assert quantize_model(m, 2).w.tolist() == [0.0, 0.0] and quantize_model(m, 2).b == 0.0
        assert classify_fx(m, [0.3, 0], PrecisionConfig(8, 2)) == 1

    def test_errors(self):
        with pytest.raises(ValueError):
            classify_fx(Model([1, 0], 0), [0.1, 0.2, 0.3], PrecisionConfig(4, 4))
        with pytest.raises(ValueError):
            classify_fx(Model([1, 0], 0), [1.5, 0], PrecisionConfig(4, 4))

    @settings(max_examples=300)
    @given(st.integers(1, 10), st.integers(1, 10),
           st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-2, 2),
           st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_decision_is_exact(self, b_x, b_f, w, b, x):
        # oracle: rational arithmetic on the quantized operands
        m = Model(w, b)
        pc = PrecisionConfig(b_x, b_f)
        mq = quantize_model(m, b_f)
        xq = quantize_inputs(x, b_x)
        exact = sum((Fraction(a) * Fraction(c) for a, c in zip(mq.w, xq)), Fraction(mq.b))
        assert decision_fx(m, x, pc)[0] == float(exact)
        assert classify_fx(m, x, pc) == (1 if exact >= 0 else -1)


class TestMismatchMc:
    def test_zero_noise(self, synthetic4):
        m = Model([1.0, 0.5, -0.25, 0.125], 0.01)
        rep = mismatch_mc(m, synthetic4.subset(range(50)), PrecisionConfig(40, 40), trials=20, seed=0)
        assert rep.p_m_hat == 0.0

    def test_far_sample(self):
        m = Model([4.0, 4.0], 0.0)
        rep = mismatch_mc(m, one([0.9, 0.9]), PrecisionConfig(3, 3), trials=2000, seed=1)
        assert rep.p_m_hat == 0.0 and rep.p_fl == 1.0 and rep.p_e_fx == 0.0

    def test_deterministic(self, synthetic4):
        m = Model([1.0, 0.5, -0.25, 0.125], 0.01)
        d = synthetic4.subset(range(80))
        a = mismatch_mc(m, d, PrecisionConfig(3, 4), trials=50, seed=9)
        b = mismatch_mc(m, d, PrecisionConfig(3, 4), trials=50, seed=9)
        assert a == b

    def test_matches_analytic_single_point(self):
        # N=1, w=1, b=0, x=0.1, weight noise off (huge B_F): flip iff q_x < -0.1, q_x ~ U(+-0.25)
        rep = mismatch_mc(Model([1.0], 0.0), one([0.1]), PrecisionConfig(2, 40), trials=200000, seed=3)
        assert abs(rep.p_m_hat - 0.3) < 4 * math.sqrt(0.3 * 0.7 / 200000)

    def test_cross_term_small(self, bc_split):
        tr, _ = bc_split
        m, _ = train(tr, TrainConfig())
        for b in (6, 8):
            pc = PrecisionConfig(b, b)
            with_ct = mismatch_mc(m, tr, pc, trials=300, seed=5)
            without = mismatch_mc(m, tr, pc, trials=300, seed=5, cross_term=False)
            assert abs(with_ct.p_m_hat - without.p_m_hat) <= 0.1 * max(with_ct.p_m_hat, 1e-3)


class TestEffectiveUpdate:
    K = 4  # gamma = 1/16

    def test_examples(self):
        g = 2.0**-self.K
        assert effective_update(0.75, self.K, 5) == 0.0
        assert effective_update(-0.75, self.K, 5) == -g
        assert effective_update(-0.25, self.K, 6) == -g / 2

    @pytest.mark.parametrize("b_x", [2, 3, 4])
    @pytest.mark.parametrize("k", [3, 4, 5])
    def test_case_tables_exhaustive(self, b_x, k):
        g = 2.0**-k
        for xt in QGrid.signed(b_x).points():
            case1 = effective_update(xt, k, 1 + k, b_x=b_x)
            assert case1 == (0.0 if xt >= 0 else -g)
            case2 = effective_update(xt, k, 2 + k, b_x=b_x)
            if xt >= 0.5:
                assert case2 == g / 2
            elif xt >= 0:
                assert case2 == 0.0
            elif xt >= -0.5:
                assert case2 == -g / 2
            else:
                assert case2 == -g
            case3 = effective_update(xt, k, k, b_x=b_x)
            assert case3 == (0.0 if xt >= 0 else -2 * g)

    @pytest.mark.parametrize("b_x", [2, 3, 4])
    def test_translation_invariance(self, b_x):
        k = 4
        for b_w in (k, k + 1, k + 2, k + b_x):
            lsb = 2.0 ** -(b_w - 1)
            for xt in QGrid.signed(b_x).points():
                ref = effective_update(xt, k, b_w)
                for j in (-7, -1, 1, 5, 12):
                    assert effective_update(xt, k, b_w, w=j * lsb) == ref

    @pytest.mark.parametrize("b_x", [2, 3, 4, 6])
    def test_exact_at_bound(self, b_x):
        k = 5
        for xt in QGrid.signed(b_x).points():
            assert effective_update(xt, k, b_x + k) == xt * 2.0**-k

    @pytest.mark.parametrize("b_x", [2, 4, 6])
    def test_bound_saturation(self, b_x):
        k = 5
        dx = 2.0 ** -(b_x - 1)
        at = b_x + k
        lsb = 2.0 ** -(at - 1)
        assert abs(effective_update(dx, k, at)) >= lsb
        assert abs(effective_update(-dx, k, at)) >= lsb
        assert effective_update(dx, k, at - 1) == 0.0

    def test_off_grid(self):
        with pytest.raises(ValueError):
            effective_update(0.3, 4, 6, b_x=3)
        with pytest.raises(ValueError):
            effective_update(1.5, 4, 6)


class TestTrainFx:
    def test_grid_closure(self, synthetic4):
        d = synthetic4.subset(range(120))
        for b_w in (5, 6, 8, 11):
            pc = PrecisionConfig(6, 6, b_w)
            _, _, upd = train_fx(d, TrainConfig(epochs=2), pc, check_grid=True, return_update_model=True)
            scale = 2.0 ** (b_w - 1)
            assert np.all(upd.w * scale == np.round(upd.w * scale))
            assert upd.b * scale == round(upd.b * scale)

    def test_returned_model_on_bf_grid(self, synthetic4):
        m, _ = train_fx(synthetic4, TrainConfig(epochs=1), PrecisionConfig(6, 6, 11))
        s = 2.0**5
        assert np.all(m.w * s == np.round(m.w * s))

    def test_no_update_is_bit_identical(self):
        # lam=0: once the sample sits outside the margin, later epochs leave the weights untouched
        d = Dataset(np.array([[0.5, 0.5]]), np.array([1]), "far")
        pc = PrecisionConfig(6, 6, 10)

        def run(epochs):
            cfg = TrainConfig(gamma_log2=3, lam=0.0, epochs=epochs)
            return train_fx(d, cfg, pc, max_abs=1.0, return_update_model=True)[2]

        a, b = run(40), run(41)
        assert float(np.dot(a.w, [0.5, 0.5]) + a.b) > 1.0
        assert b.w.tobytes() == a.w.tobytes() and b.b == a.b

    def test_tracks_float_when_wide(self, bc_split):
        tr, _ = bc_split
        cfg = TrainConfig(epochs=3)
        fm, ft = train(tr, cfg)
        _, t = train_fx(tr, cfg, PrecisionConfig(6, 6, 14))
        assert abs(t.final() - ft.final()) <= 0.1 * ft.final()

    def test_deterministic(self, synthetic4):
        pc = PrecisionConfig(5, 6, 9)
        a = train_fx(synthetic4, TrainConfig(epochs=2, seed=1), pc)
        b = train_fx(synthetic4, TrainConfig(epochs=2, seed=1), pc)
        assert a[0].w.tobytes() == b[0].w.tobytes() and a[1].raw.tobytes() == b[1].raw.tobytes()

    def test_needs_bw(self, synthetic4):
        with pytest.raises(ValueError):
            train_fx(synthetic4, TrainConfig(), PrecisionConfig(6, 6))


def test_predict_fx_wide_matches_float(bc_split):
    tr, te = bc_split
    m, _ = train(tr, TrainConfig())
    assert np.array_equal(predict_fx(m, te.X, PrecisionConfig(40, 40)), predict(m, te.X))
