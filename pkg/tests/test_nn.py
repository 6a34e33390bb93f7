import numpy as np
import pytest

from quintlink import nn


def numeric_gradient(fn, arr, h=1e-5):
    """Central finite differences of a scalar function wrt ``arr`` in place."""
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        original = arr[idx]
        arr[idx] = original + h
        up = fn()
        arr[idx] = original - h
        down = fn()
        arr[idx] = original
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def relative_error(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8))) \
        if a.size else 0.0


def check_layer_gradients(layer, x, tol=1e-4, rng=None):
    """Finite-difference check of input and parameter gradients for one layer."""
    rng = rng or np.random.default_rng(0)
    buffers = [buf.copy() for _, buf in layer.buffers()]

    probe = rng.normal(size=layer.forward(x.copy(), train=True).shape)
    for (_, buf), saved in zip(layer.buffers(), buffers):
        buf[...] = saved

    def loss():
        out = layer.forward(x, train=True)
        for (_, buf), saved in zip(layer.buffers(), buffers):
            buf[...] = saved
        return float((out * probe).sum())

    layer.forward(x, train=True)
    for (_, buf), saved in zip(layer.buffers(), buffers):
        buf[...] = saved
    for p in layer.parameters():
        p.zero_grad()
    dx = layer.backward(probe)

    errors = [relative_error(dx, numeric_gradient(loss, x))]
    errors += [relative_error(p.grad, numeric_gradient(loss, p.value))
               for p in layer.parameters()]
    worst = max(errors)
    assert worst <= tol, f"{layer.spec()}: max relative error {worst:.2e}"
    return worst


class TestForwardContracts:
    def test_conv_output_length_formula(self):
        assert nn.conv_output_length(384, 7, 2) == 189
        rng = np.random.default_rng(0)
        conv = nn.Conv1D(1, 32, 7, 2, rng)
        out = conv.forward(rng.normal(size=(2, 1, 384)), train=False)
        assert out.shape == (2, 32, 189)

    def test_conv_pool_shape_formula_holds(self, rng):
        for _ in range(30):
            length = int(rng.integers(1, 60))
            kernel = int(rng.integers(1, 12))
            stride = int(rng.integers(1, 6))
            expected = (length - kernel) // stride + 1
            pool = nn.AvgPool1D(kernel, stride)
            x = rng.normal(size=(2, 3, length))
            if expected <= 0:
                with pytest.raises(nn.ConfigurationError):
                    pool.forward(x, train=False)
            else:
                assert pool.forward(x, train=False).shape == (2, 3, expected)

    def test_softmax_uniform_on_zeros(self):
        out = nn.Softmax().forward(np.zeros((1, 2)), train=False)
        np.testing.assert_array_equal(out, [[0.5, 0.5]])

    def test_softmax_rows_sum_to_one(self, rng):
        x = rng.normal(scale=10, size=(50, 7))
        out = nn.Softmax().forward(x, train=False)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_batchnorm_zero_mean_pre_affine(self, rng):
        bn = nn.BatchNorm1d(6)  # default affine is identity
        out = bn.forward(rng.normal(loc=3.0, size=(32, 6)), train=True)
        assert np.max(np.abs(out.mean(axis=0))) <= 1e-9

    def test_batchnorm_running_stats_converge(self, rng):
        bn = nn.BatchNorm1d(4)
        x = rng.normal(loc=2.0, scale=3.0, size=(16, 4))
        for _ in range(200):
            bn.forward(x, train=True)
        np.testing.assert_allclose(bn.running_mean, x.mean(axis=0), atol=1e-6)
        np.testing.assert_allclose(bn.running_var, x.var(axis=0), atol=1e-6)

    def test_batchnorm_eval_uses_running_stats(self, rng):
        bn = nn.BatchNorm1d(4)
        x = rng.normal(size=(16, 4))
        for _ in range(50):
            bn.forward(x, train=True)
        out = bn.forward(x[:3], train=False)
        expected = (x[:3] - bn.running_mean) / np.sqrt(bn.running_var + bn.EPS)
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_eval_forward_is_pure(self, rng):
        bn = nn.BatchNorm1d(4)
        x = rng.normal(size=(8, 4))
        before = (bn.running_mean.copy(), bn.running_var.copy())
        one = bn.forward(x, train=False)
        two = bn.forward(x, train=False)
        np.testing.assert_array_equal(one, two)
        np.testing.assert_array_equal(bn.running_mean, before[0])
        np.testing.assert_array_equal(bn.running_var, before[1])

    def test_relu_gradient_zero_for_negative_inputs(self, rng):
        relu = nn.ReLU()
        x = -np.abs(rng.normal(size=(5, 5))) - 0.1
        relu.forward(x, train=True)
        dx = relu.backward(np.ones_like(x))
        np.testing.assert_array_equal(dx, np.zeros_like(x))

    def test_linear_zero_upstream_zero_param_grads(self, rng):
        layer = nn.Linear(4, 3, rng)
        layer.forward(rng.normal(size=(6, 4)), train=True)
        layer.backward(np.zeros((6, 3)))
        np.testing.assert_array_equal(layer.weight.grad, 0.0)
        np.testing.assert_array_equal(layer.bias.grad, 0.0)

    def test_bilstm_output_shape(self, rng):
        lstm = nn.BiLSTM(8, 16, 2, rng)
        out = lstm.forward(rng.normal(size=(3, 5, 8)), train=False)
        assert out.shape == (3, 5, 32)


class TestErrors:
    def test_shape_error_names_layer(self, rng):
        layer = nn.Linear(4, 3, rng)
        with pytest.raises(nn.ShapeError, match="Linear"):
            layer.forward(rng.normal(size=(2, 5)))

    def test_conv_empty_output_is_config_error(self, rng):
        conv = nn.Conv1D(1, 2, 7, 2, rng)
        with pytest.raises(nn.ConfigurationError):
            conv.forward(rng.normal(size=(1, 1, 5)))

    def test_backward_without_forward(self, rng):
        layer = nn.Linear(4, 3, rng)
        with pytest.raises(nn.StateError):
            layer.backward(np.zeros((2, 3)))

    def test_backward_after_eval_forward(self, rng):
        bn = nn.BatchNorm1d(3)
        bn.forward(rng.normal(size=(4, 3)), train=False)
        with pytest.raises(nn.StateError):
            bn.backward(np.zeros((4, 3)))

    def test_non_finite_trips_numeric_error(self, rng):
        layer = nn.Linear(3, 2, rng)
        bad = np.array([[1.0, np.nan, 0.0]])
        with pytest.raises(nn.NumericError):
            layer.forward(bad)


class TestGradients:
    def test_linear(self, rng):
        check_layer_gradients(nn.Linear(5, 4, rng), rng.normal(size=(3, 5)))

    def test_activations(self, rng):
        x = rng.normal(size=(4, 6))
        x[np.abs(x) < 0.01] += 0.1  # keep the finite difference off the ReLU kink
        check_layer_gradients(nn.ReLU(), x)
        check_layer_gradients(nn.Sigmoid(), rng.normal(size=(4, 6)))
        check_layer_gradients(nn.Softmax(), rng.normal(size=(4, 3)))

    def test_batchnorm_both_ranks(self, rng):
        check_layer_gradients(nn.BatchNorm1d(5), rng.normal(size=(7, 5)))
        check_layer_gradients(nn.BatchNorm1d(3), rng.normal(size=(4, 3, 6)))

    def test_conv_and_pool(self, rng):
        check_layer_gradients(nn.Conv1D(2, 3, 3, 2, rng), rng.normal(size=(2, 2, 11)))
        check_layer_gradients(nn.AvgPool1D(3, 2), rng.normal(size=(2, 2, 11)))

    def test_bilstm_stacked(self, rng):
        check_layer_gradients(nn.BiLSTM(3, 4, 2, rng), rng.normal(size=(2, 4, 3)))

    def test_reshape_layers(self, rng):
        check_layer_gradients(nn.Flatten(), rng.normal(size=(2, 3, 4)))
        check_layer_gradients(nn.SequenceReshape(4), rng.normal(size=(2, 10)))
        check_layer_gradients(nn.ChannelReshape(), rng.normal(size=(2, 8)))
        check_layer_gradients(nn.LastStep(), rng.normal(size=(2, 3, 4)))


class TestCrossEntropy:
    def test_uniform_logits(self):
        loss, _ = nn.cross_entropy(np.zeros((1, 2)), np.array([0]))
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_saturated_correct(self):
        logits = np.array([[20.0, -20.0], [-20.0, 20.0]])
        loss, _ = nn.cross_entropy(logits, np.array([0, 1]))
        assert loss <= 1e-8

    def test_gradient_matches_finite_differences(self, rng):
        logits = rng.normal(size=(6, 2))
        labels = rng.integers(0, 2, 6)
        _, grad = nn.cross_entropy(logits, labels)
        numeric = numeric_gradient(lambda: nn.cross_entropy(logits, labels)[0], logits)
        assert relative_error(grad, numeric) <= 1e-4

    def test_gradient_is_softmax_minus_onehot(self, rng):
        logits = rng.normal(size=(4, 2))
        labels = np.array([0, 1, 1, 0])
        _, grad = nn.cross_entropy(logits, labels)
        expected = nn.softmax_rows(logits)
        expected[np.arange(4), labels] -= 1.0
        np.testing.assert_allclose(grad, expected / 4.0, atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(nn.NumericError):
            nn.cross_entropy(np.array([[np.inf, 0.0]]), np.array([0]))


class TestAdam:
    def test_quadratic_converges(self):
        p = nn.Parameter(np.array([0.0]))
        adam = nn.Adam([p], lr=0.1)
        for _ in range(500):
            p.grad[...] = 2.0 * (p.value - 3.0)
            adam.step()
        assert abs(float(p.value[0]) - 3.0) <= 1e-3

    def test_zero_gradient_fixed_point(self, rng):
        p = nn.Parameter(rng.normal(size=(3, 3)))
        before = p.value.copy()
        adam = nn.Adam([p], lr=0.1)
        adam.step()
        np.testing.assert_array_equal(p.value, before)

    def test_step_counter_and_grad_reset(self, rng):
        p = nn.Parameter(rng.normal(size=(2,)))
        adam = nn.Adam([p], lr=0.01)
        for expected_t in (1, 2, 3):
            p.grad[...] = 1.0
            adam.step()
            assert adam.t == expected_t
            np.testing.assert_array_equal(p.grad, 0.0)

    def test_first_step_is_lr_sized(self):
        # with constant gradient g, the bias-corrected first step is exactly lr*sign(g)
        p = nn.Parameter(np.array([1.0]))
        adam = nn.Adam([p], lr=0.001)
        p.grad[...] = 5.0
        adam.step()
        assert float(p.value[0]) == pytest.approx(1.0 - 0.001, rel=1e-6)

    def test_non_trainable_untouched(self, rng):
        p = nn.Parameter(rng.normal(size=(2,)), trainable=False)
        before = p.value.copy()
        adam = nn.Adam([p], lr=0.5)
        p.grad[...] = 3.0
        adam.step()
        np.testing.assert_array_equal(p.value, before)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        tensors = [("a", rng.normal(size=(3, 4))), ("b", rng.normal(size=(5,)))]
        path = tmp_path / "t.qlck"
        nn.save_tensors(path, "Linear(3,4)", tensors, extra={"k": 1})
        spec, loaded, extra = nn.load_tensors(path)
        assert spec == "Linear(3,4)"
        assert extra == {"k": 1}
        for name, arr in tensors:
            np.testing.assert_array_equal(loaded[name], arr)

    def test_corruption_detected(self, tmp_path, rng):
        path = tmp_path / "t.qlck"
        nn.save_tensors(path, "spec", [("a", rng.normal(size=(4,)))])
        blob = bytearray(path.read_bytes())
        blob[-3] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(nn.CheckpointError, match="checksum"):
            nn.load_tensors(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "t.qlck"
        path.write_bytes(b"garbage")
        with pytest.raises(nn.CheckpointError):
            nn.load_tensors(path)
