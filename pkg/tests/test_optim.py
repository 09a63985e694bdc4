"""Tests for the Adam optimizer."""

import numpy as np
import pytest

from augnet.engine.optim import Adam, adam_step
from augnet.errors import DimensionError, NonFiniteGradientError


def reference_adam(param, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Straight-line Adam update used as an oracle."""
    m = np.zeros_like(param)
    v = np.zeros_like(param)
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        param = param - lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


class TestAdamStep:
    """Tests for the single-array update."""

    def test_first_step_moves_by_lr(self):
        """Test that a unit gradient moves every entry by about lr."""
        param = np.zeros(4)
        moments = (np.zeros(4), np.zeros(4))
        adam_step(param, np.ones(4), moments, step=1, lr=0.01)
        assert np.allclose(param, -0.01, atol=1e-8)

    def test_zero_gradient_keeps_param(self):
        """Test that zero gradients never move the parameter."""
        param = np.array([1.0, -2.0])
        moments = (np.zeros(2), np.zeros(2))
        for step in range(1, 20):
            adam_step(param, np.zeros(2), moments, step=step, lr=0.1)
        assert param.tolist() == [1.0, -2.0]

    def test_matches_reference(self):
        """Test a random gradient sequence against the reference."""
        rng = np.random.default_rng(0)
        start = rng.normal(size=(3, 2))
        grads = [rng.normal(size=(3, 2)) for _ in range(25)]

        param = start.copy()
        moments = (np.zeros_like(param), np.zeros_like(param))
        for step, grad in enumerate(grads, start=1):
            adam_step(param, grad, moments, step=step, lr=0.05)

        assert np.allclose(param, reference_adam(start, grads, lr=0.05), rtol=1e-12, atol=1e-12)

    def test_non_finite_gradient(self):
        """Test that NaN gradients abort with the parameter name."""
        param = np.zeros(3)
        with pytest.raises(NonFiniteGradientError, match="'w1'") as excinfo:
            adam_step(param, np.array([0.0, np.nan, np.inf]), (np.zeros(3), np.zeros(3)), 1, 0.01, name="w1")
        assert excinfo.value.bad_count == 2
        assert not param.any()

    def test_shape_mismatch(self):
        """Test gradient and parameter shapes must agree."""
        with pytest.raises(DimensionError):
            adam_step(np.zeros(3), np.zeros(2), (np.zeros(3), np.zeros(3)), 1, 0.01)


class TestAdam:
    """Tests for the multi-parameter optimizer state."""

    def test_step_counter_and_buffers(self):
        """Test buffers mirror parameter shapes and the counter advances."""
        params = {"a": np.zeros((2, 3)), "b": np.zeros(1)}
        optimizer = Adam(lr=0.01)
        optimizer.step(params, {"a": np.ones((2, 3)), "b": np.ones(1)})
        optimizer.step(params, {"a": np.ones((2, 3)), "b": np.ones(1)})

        assert optimizer.step_count == 2
        assert optimizer.first["a"].shape == (2, 3)
        assert optimizer.second["b"].shape == (1,)

    def test_bad_gradient_leaves_everything_untouched(self):
        """Test validation happens before any parameter is updated."""
        params = {"a": np.zeros(2), "b": np.zeros(2)}
        optimizer = Adam(lr=0.01)
        with pytest.raises(NonFiniteGradientError):
            optimizer.step(params, {"a": np.ones(2), "b": np.array([np.nan, 0.0])})
        assert not params["a"].any()
        assert optimizer.step_count == 0

    def test_state_copy_is_independent(self):
        """Test that a copied state does not share buffers."""
        params = {"a": np.zeros(2)}
        optimizer = Adam(lr=0.01)
        optimizer.step(params, {"a": np.ones(2)})
        clone = optimizer.state_copy()
        optimizer.step(params, {"a": np.ones(2)})
        assert clone.step_count == 1
        assert not np.array_equal(clone.first["a"], optimizer.first["a"])
