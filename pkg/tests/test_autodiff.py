import numpy as np
import pytest

from vano.core import ops
from vano.core.checkpoint import load_checkpoint, save_checkpoint
from vano.core.layers import dense_weight, forward_dense, forward_mlp, init_dense, init_mlp, rwf_reparameterize
from vano.core.optim import AdamState, adam_step, effective_lr
from vano.core.params import ParamStore
from vano.core.rng import Purpose, rng_stream
from vano.core.tape import Tape, backward, unbroadcast
from vano.exceptions import ConfigError, ContractError, DatasetFormatError, DimensionError, NumericalError


def gradient_pair(store, build, numeric_grad, seed=0):
    """Tape gradient and central differences of sum(build(store) * w) for a fixed random w."""
    w = np.random.default_rng(seed).normal(size=build(store).shape)

    def loss_value():
        return float(np.sum(build(store).value * w))

    store.zero_grad()
    with Tape() as tape:
        loss = ops.total(ops.mul(build(store), w))
        backward(tape, loss)
    return store.grads.copy(), numeric_grad(loss_value, store.values)


def store_with(**tensors):
    store = ParamStore()
    for name, value in tensors.items():
        store.declare(name, value)
    return store


UNARY_CASES = {
    "square": ops.square,
    "exp": ops.exp,
    "neg": ops.neg,
    "gelu": ops.gelu,
    "tanh": ops.tanh,
    "softplus": ops.softplus,
    "sigmoid": ops.sigmoid,
    "sum_axis": lambda x: ops.total(x, axis=1),
    "mean_keepdims": lambda x: ops.mean(x, axis=0, keepdims=True),
    "reshape": lambda x: ops.reshape(x, (2, 6)),
    "take": lambda x: ops.take(x, slice(1, 3), axis=1),
    "clip_inside": lambda x: ops.clip(x, -10.0, 10.0),
}


@pytest.mark.parametrize("name", sorted(UNARY_CASES))
def test_unary_op_gradients(name, numeric_grad):
    fn = UNARY_CASES[name]
    store = store_with(x=np.random.default_rng(1).normal(size=(3, 4)))
    analytic, numeric = gradient_pair(store, lambda s: fn(s.node("x")), numeric_grad)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_broadcasting_binary_gradients(numeric_grad):
    rng = np.random.default_rng(2)
    store = store_with(a=rng.normal(size=(3, 1, 4)), b=rng.normal(size=(1, 5, 4)), c=rng.normal(size=(4,)))

    def build(s):
        a, b, c = s.node("a"), s.node("b"), s.node("c")
        return ops.sub(ops.mul(ops.add(a, b), c), ops.square(b))

    analytic, numeric = gradient_pair(store, build, numeric_grad)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_matmul_gradients(numeric_grad):
    rng = np.random.default_rng(3)
    store = store_with(x=rng.normal(size=(4, 3)), w=rng.normal(size=(2, 3)), y=rng.normal(size=(2, 3, 5)))

    def build(s):
        h = ops.matmul_t(s.node("x"), s.node("w"))
        return ops.matmul(ops.reshape(h, (2, 2, 2)), ops.take(s.node("y"), slice(0, 2), axis=1))

    analytic, numeric = gradient_pair(store, build, numeric_grad)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_matmul_shape_mismatch_raises():
    with pytest.raises(DimensionError):
        ops.matmul_t(np.ones((2, 3)), np.ones((4, 2)))
    with pytest.raises(DimensionError):
        ops.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_clip_blocks_gradient_outside_range():
    store = store_with(x=np.array([-3.0, 0.5, 3.0]))
    with Tape() as tape:
        backward(tape, ops.total(ops.clip(store.node("x"), -1.0, 1.0)))
    np.testing.assert_array_equal(store.grads, [0.0, 1.0, 0.0])


def test_unknown_activation_is_a_config_error():
    with pytest.raises(ConfigError):
        ops.activate(np.zeros(2), "relu6")


def test_backward_rejects_non_scalar_loss():
    store = store_with(x=np.ones(3))
    with Tape() as tape:
        out = ops.square(store.node("x"))
        with pytest.raises(ContractError):
            backward(tape, out)


def test_backward_rejects_loss_from_another_tape():
    store = store_with(x=np.ones(3))
    with Tape():
        loss = ops.total(store.node("x"))
    with Tape() as other:
        with pytest.raises(ContractError):
            backward(other, loss)


def test_nodes_outside_a_tape_are_not_recorded():
    with Tape() as tape:
        pass
    ops.add(np.ones(2), np.ones(2))
    assert len(tape) == 0


def test_unreached_parameters_keep_zero_gradient():
    store = store_with(x=np.ones(2), unused=np.ones(3))
    with Tape() as tape:
        backward(tape, ops.total(ops.square(store.node("x"))))
    np.testing.assert_array_equal(store.grad_view("unused"), np.zeros(3))
    np.testing.assert_array_equal(store.grad_view("x"), [2.0, 2.0])


def test_unbroadcast_sums_expanded_axes():
    grad = np.ones((2, 3, 4))
    assert unbroadcast(grad, (3, 1)).tolist() == [[8.0]] * 3
    assert unbroadcast(grad, (1, 3, 4)).shape == (1, 3, 4)
    np.testing.assert_array_equal(unbroadcast(grad, (4,)), np.full(4, 6.0))


def test_param_store_layout_is_contiguous():
    store = store_with(a=np.zeros((2, 3)), b=np.zeros(4))
    store.validate()
    assert [slot.offset for slot in store.layout] == [0, 6]
    assert len(store) == 10
    with pytest.raises(ContractError):
        store.declare("a", np.zeros(1))
    with pytest.raises(DimensionError):
        store.assign("b", np.zeros(3))


@pytest.mark.parametrize("weight, bias, x, activation, expected", [
    (np.eye(2), np.zeros(2), [1.0, 2.0], "identity", [1.0, 2.0]),
    (np.zeros((1, 2)), np.array([3.0]), [7.0, -4.0], "softplus", [3.048587351573742]),
    (np.ones((1, 2)), np.zeros(1), [0.5, 0.5], "sigmoid", [0.7310585786300049]),
    (np.eye(2), np.zeros(2), [1.0, -1.0], "gelu", [0.8413447460685429, -0.15865525393145707]),
])
def test_dense_layer_values(weight, bias, x, activation, expected):
    # gelu uses the exact erf form; the tanh approximation is off by ~1.5e-4 at x = 1
    store = store_with(**{"l.w": weight, "l.b": bias})
    out = forward_dense(store, "l", np.array(x), activation)
    np.testing.assert_allclose(out.value, expected, rtol=0, atol=1e-12)


def test_dense_layer_with_split_inputs_matches_concatenation(numeric_grad):
    stream = rng_stream(0, Purpose.INIT)
    store = ParamStore()
    init_dense(store, "layer", 5, 3, stream)
    store = rwf_reparameterize(store, True, rng_stream(0, Purpose.INIT, 1))
    rng = np.random.default_rng(4)
    left, right = rng.normal(size=(2, 1, 2)), rng.normal(size=(1, 4, 3))

    joined = np.concatenate([np.broadcast_to(left, (2, 4, 2)), np.broadcast_to(right, (2, 4, 3))], axis=-1)
    split = forward_dense(store, "layer", [left, right], "gelu").value
    whole = forward_dense(store, "layer", joined, "gelu").value
    np.testing.assert_allclose(split, whole, rtol=0, atol=1e-12)

    analytic, numeric = gradient_pair(store, lambda s: forward_dense(s, "layer", [left, right], "gelu"), numeric_grad)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-9)


def test_rwf_preserves_the_initial_function():
    stream = rng_stream(5, Purpose.INIT)
    plain = ParamStore()
    init_mlp(plain, "net", [3, 6, 2], stream)
    factored = rwf_reparameterize(plain, True, rng_stream(5, Purpose.INIT, 1))

    assert "net.0.w.scale" in factored and "net.0.w" not in factored
    assert "net.0.b" in factored
    x = np.random.default_rng(6).normal(size=(7, 3))
    np.testing.assert_allclose(
        forward_mlp(factored, "net", x, 2, "tanh").value,
        forward_mlp(plain, "net", x, 2, "tanh").value,
        rtol=1e-12, atol=1e-12,
    )
    assert rwf_reparameterize(plain, False, stream) is plain


def test_rwf_with_zero_scale_leaves_the_weight_exact():
    store = ParamStore()
    init_dense(store, "l", 3, 4, rng_stream(0, Purpose.INIT))
    factored = rwf_reparameterize(store, True, rng_stream(0, Purpose.INIT, 1), init_mean=0.0, init_std=0.0)
    np.testing.assert_array_equal(factored.view("l.w.scale"), np.zeros(4))
    np.testing.assert_array_equal(factored.view("l.w.dir"), store.view("l.w"))
    np.testing.assert_array_equal(dense_weight(factored, "l").value, store.view("l.w"))


def test_adam_first_step_moves_by_learning_rate():
    store = store_with(x=np.array([1.0, -2.0]))
    store.grads[...] = [0.5, -0.1]
    state = AdamState.for_params(store, base_lr=1e-3)
    lr = adam_step(state, store)
    assert lr == 1e-3
    assert state.step == 1
    np.testing.assert_allclose(store.values, [1.0 - 1e-3, -2.0 + 1e-3], rtol=1e-6)


def test_adam_with_zero_gradients_changes_nothing():
    store = store_with(x=np.array([1.0, -2.0, 0.25]))
    state = AdamState.for_params(store, base_lr=1e-2)
    adam_step(state, store)
    np.testing.assert_array_equal(store.values, [1.0, -2.0, 0.25])
    np.testing.assert_array_equal(state.m, np.zeros(3))
    np.testing.assert_array_equal(state.v, np.zeros(3))
    assert state.step == 1


def test_effective_lr_decays_stepwise():
    state = AdamState.for_params(store_with(x=np.zeros(1)), base_lr=1e-3, decay_rate=0.9, decay_every=1000)
    state.step = 999
    assert effective_lr(state) == pytest.approx(1e-3)
    state.step = 1000
    assert effective_lr(state) == pytest.approx(9e-4)
    state.step = 2500
    assert effective_lr(state) == pytest.approx(8.1e-4)


def test_adam_rejects_nan_gradient_without_touching_state():
    store = store_with(x=np.array([1.0, 2.0]), y=np.array([3.0]))
    store.grad_view("y")[...] = np.nan
    state = AdamState.for_params(store)
    with pytest.raises(NumericalError) as info:
        adam_step(state, store)
    assert info.value.tensor == "y"
    assert state.step == 0
    np.testing.assert_array_equal(store.values, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(state.m, np.zeros(3))


def test_rng_streams_are_keyed():
    a = rng_stream(7, Purpose.DATA, 3).normal(5)
    assert np.array_equal(a, rng_stream(7, Purpose.DATA, 3).normal(5))
    assert not np.array_equal(a, rng_stream(7, Purpose.DATA, 4).normal(5))
    assert not np.array_equal(a, rng_stream(7, Purpose.INIT, 3).normal(5))
    assert not np.array_equal(a, rng_stream(8, Purpose.DATA, 3).normal(5))


def test_rng_normals_have_unit_moments():
    draws = rng_stream(0, Purpose.LATENT_NOISE).normal((1000, 1000))
    assert draws.shape == (1000, 1000)
    assert abs(draws.mean()) < 4.0 / np.sqrt(draws.size)
    assert draws.var() == pytest.approx(1.0, abs=0.01)


def test_checkpoint_round_trip(tmp_path):
    store = store_with(**{"enc.0.w": np.arange(6.0).reshape(2, 3), "enc.0.b": np.array([0.5, -0.5])})
    state = AdamState.for_params(store, base_lr=2e-3, decay_every=10)
    state.m[...] = 1.5
    state.step = 12
    buffers = {"encoding.B": np.ones((4, 2))}
    path = save_checkpoint(tmp_path / "a.ckpt", store, buffers, state, {"note": "x"})

    loaded = load_checkpoint(path)
    assert loaded.params.names() == store.names()
    np.testing.assert_array_equal(loaded.params.values, store.values)
    np.testing.assert_array_equal(loaded.buffers["encoding.B"], buffers["encoding.B"])
    assert loaded.adam.step == 12 and loaded.adam.decay_every == 10
    assert loaded.adam.base_lr == 2e-3
    np.testing.assert_array_equal(loaded.adam.m, state.m)
    assert loaded.meta == {"note": "x"}

    save_checkpoint(tmp_path / "b.ckpt", loaded.params, loaded.buffers, loaded.adam, loaded.meta)
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
    with pytest.raises(DatasetFormatError, match="VANOCKP1"):
        load_checkpoint(path)


def test_truncated_checkpoint_reports_offset(tmp_path):
    path = save_checkpoint(tmp_path / "a.ckpt", store_with(x=np.ones(4)))
    path.write_bytes(path.read_bytes()[:20])
    with pytest.raises(DatasetFormatError) as info:
        load_checkpoint(path)
    assert info.value.offset is not None


def test_corrupted_checkpoint_metadata_is_a_format_error(tmp_path):
    path = save_checkpoint(tmp_path / "a.ckpt", store_with(x=np.ones(4)), meta={"note": "x"})
    data = bytearray(path.read_bytes())
    meta_at = len(data) - len(b'{"note":"x"}')
    data[-2] = 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError, match="unreadable metadata") as info:
        load_checkpoint(path)
    assert info.value.offset == meta_at

    path.write_bytes(bytes(data[:meta_at - 4]) + (6).to_bytes(4, "little") + b"[1, 2]")
    with pytest.raises(DatasetFormatError, match="not an object"):
        load_checkpoint(path)


def test_corrupted_tensor_name_is_a_format_error(tmp_path):
    path = save_checkpoint(tmp_path / "a.ckpt", store_with(x=np.ones(4)))
    data = bytearray(path.read_bytes())
    assert data[16:17] == b"x"
    data[16] = 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError, match="tensor name") as info:
        load_checkpoint(path)
    assert info.value.offset == 16


@pytest.mark.parametrize("rwf", [False, True])
def test_small_regression_converges_with_and_without_rwf(rwf):
    x = np.linspace(-1.0, 1.0, 16)[:, None]
    y = x ** 2 - 0.5
    store = ParamStore()
    init_mlp(store, "net", [1, 16, 1], rng_stream(0, Purpose.INIT))
    store = rwf_reparameterize(store, rwf, rng_stream(0, Purpose.INIT, 1))
    state = AdamState.for_params(store, base_lr=1e-2, decay_every=10_000)

    for _ in range(3000):
        store.zero_grad()
        with Tape() as tape:
            loss = ops.mean(ops.square(ops.sub(forward_mlp(store, "net", x, 2, "tanh"), y)))
            backward(tape, loss)
        adam_step(state, store)
    assert float(loss.value) <= 1e-3
