"""Finite-difference verification of every layer's backward pass.

All checks run in the 64-bit path with central differences (h = 1e-3) and
norm-based relative error below 1e-4. Outputs are scalarized against a fixed
random cotangent R: L = sum(forward(x) * R), whose input gradient is exactly
backward(R).

Kink safety: ReLU inputs are nudged away from 0 and max-pool inputs use
strictly-spread values, so no finite-difference interval straddles a
non-differentiable point or flips an argmax.
"""

import numpy as np
import pytest

from firenet import (
    AdaptiveAvgPool2d,
    Conv2d,
    Dropout,
    Flatten,
    Linear,
    MaxPool2d,
    ReLU,
    Softmax,
    cross_entropy,
    softmax,
    softmax_ce_backward,
)
from oracles import fd_gradient, nudge_from_zero, relative_error, spread_values

H = 1e-3
TOL = 1e-4


def check_input_gradient(layer, x, reseed=None):
    """FD-vs-analytic check of d(sum(out*R))/dx; returns the cotangent R."""
    layer.train()

    def run_forward():
        if reseed is not None:
            layer.reseed(reseed)
        return layer.forward(x)

    out = run_forward()
    r = np.random.default_rng(99).standard_normal(out.shape)
    analytic = layer.backward(r)
    numeric = fd_gradient(lambda: float(np.sum(run_forward() * r)), x, h=H)
    err = relative_error(analytic, numeric)
    assert err < TOL, f"{type(layer).__name__} input gradient rel err {err}"
    return r


def check_param_gradients(layer, x, r):
    """FD-vs-analytic check of every parameter gradient slot."""
    layer.train()
    layer.forward(x)
    layer.backward(r)
    for name, param in layer.params.items():
        analytic = layer.grads[name].copy()
        numeric = fd_gradient(lambda: float(np.sum(layer.forward(x) * r)),
                              param, h=H)
        err = relative_error(analytic, numeric)
        assert err < TOL, f"{type(layer).__name__}.{name} rel err {err}"


def test_conv2d_gradients(rng):
    conv = Conv2d(3, 4, dtype=np.float64)
    conv.params["weight"][:] = rng.standard_normal(conv.params["weight"].shape)
    conv.params["bias"][:] = rng.standard_normal(4)
    x = rng.standard_normal((2, 3, 8, 8))
    r = check_input_gradient(conv, x)
    check_param_gradients(conv, x, r)


def test_conv2d_strided_gradients(rng):
    conv = Conv2d(2, 3, kernel_size=(2, 2), stride=(2, 2), padding=(0, 0),
                  dtype=np.float64)
    conv.params["weight"][:] = rng.standard_normal(conv.params["weight"].shape)
    conv.params["bias"][:] = rng.standard_normal(3)
    x = rng.standard_normal((2, 2, 6, 6))
    r = check_input_gradient(conv, x)
    check_param_gradients(conv, x, r)


def test_relu_gradient(rng):
    x = nudge_from_zero(rng.standard_normal((2, 3, 8, 8)))
    check_input_gradient(ReLU(), x)


def test_maxpool_gradient(rng):
    x = spread_values(rng, (2, 3, 8, 8))
    check_input_gradient(MaxPool2d(), x)


def test_adaptive_avgpool_gradient(rng):
    x = rng.standard_normal((2, 3, 8, 8))
    check_input_gradient(AdaptiveAvgPool2d(output_size=(7, 7)), x)


def test_adaptive_avgpool_uneven_gradient(rng):
    x = rng.standard_normal((1, 2, 8, 6))
    check_input_gradient(AdaptiveAvgPool2d(output_size=(3, 5)), x)


def test_flatten_gradient(rng):
    x = rng.standard_normal((2, 3, 4, 4))
    check_input_gradient(Flatten(), x)


def test_linear_gradients(rng):
    lin = Linear(10, 7, dtype=np.float64)
    lin.params["weight"][:] = rng.standard_normal((7, 10))
    lin.params["bias"][:] = rng.standard_normal(7)
    x = rng.standard_normal((4, 10))
    r = check_input_gradient(lin, x)
    check_param_gradients(lin, x, r)


def test_dropout_fixed_mask_gradient(rng):
    drop = Dropout(p=0.4, seed=17)
    x = rng.standard_normal((4, 50))
    check_input_gradient(drop, x, reseed=17)


def test_softmax_layer_gradient(rng):
    x = rng.standard_normal((4, 5))
    check_input_gradient(Softmax(), x)


def test_softmax_ce_fused_gradient(rng):
    """The fused (softmax then cross-entropy) gradient identity
    (p - onehot)/N against finite differences of the composed loss."""
    logits = rng.standard_normal((6, 4))
    labels = rng.integers(0, 4, size=6)
    analytic = softmax_ce_backward(logits, labels)
    numeric = fd_gradient(
        lambda: float(cross_entropy(softmax(logits), labels)), logits, h=H)
    assert relative_error(analytic, numeric) < TOL


def test_dot_product_directional_derivative(rng):
    """<grad_params, dtheta> + <grad_in, dx> approximates the directional
    derivative of the scalarized output for parameterized layers."""
    for make in (lambda: Conv2d(2, 3, dtype=np.float64),
                 lambda: Linear(8, 5, dtype=np.float64)):
        layer = make()
        for p in layer.params.values():
            p[:] = rng.standard_normal(p.shape)
        x = (rng.standard_normal((2, 2, 6, 6)) if isinstance(layer, Conv2d)
             else rng.standard_normal((3, 8)))
        layer.train()
        out = layer.forward(x)
        r = rng.standard_normal(out.shape)
        grad_in = layer.backward(r)

        dx = rng.standard_normal(x.shape)
        dtheta = {k: rng.standard_normal(v.shape)
                  for k, v in layer.params.items()}
        predicted = float(np.sum(grad_in * dx)) + sum(
            float(np.sum(layer.grads[k] * dtheta[k])) for k in layer.params)

        def loss_at(eps):
            saved = {k: v.copy() for k, v in layer.params.items()}
            for k in layer.params:
                layer.params[k][:] = saved[k] + eps * dtheta[k]
            value = float(np.sum(layer.forward(x + eps * dx) * r))
            for k in layer.params:
                layer.params[k][:] = saved[k]
            return value

        numeric = (loss_at(H) - loss_at(-H)) / (2 * H)
        assert abs(predicted - numeric) / max(abs(predicted), 1e-12) < TOL
