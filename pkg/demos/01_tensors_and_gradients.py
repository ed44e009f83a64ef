"""Tensors, the backward tape, and finite-difference verification.

Everything in segtag runs on a small reverse-mode autodiff core: dense
numpy-backed tensors whose ops record a backward closure. This script walks
through the basics and then verifies an analytic gradient against central
finite differences.
"""
import numpy as np

from segtag import autograd as ag
from segtag.autograd import Parameter, Tensor

# A tensor wraps a dense row-major array. Sequence length always leads.
x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
print("x:", x, "\n", x.data)

# Parameters carry persistent gradient and AdaGrad accumulator buffers.
w = Parameter(np.array([[0.5, -0.2, 0.1], [0.3, 0.8, -0.4]]), name="w")
b = Parameter(np.zeros(3), name="b")

# affine computes x @ W + b and registers how gradients flow back.
h = ag.affine(x, w, b)
print("\naffine output (2x3):\n", h.data)

# Compose freely; backward() accumulates into every parameter on the tape.
loss = ag.sum_all(ag.tanh(h) * ag.tanh(h))
loss.backward()
print("\nloss:", loss.item())
print("dloss/dw:\n", w.grad)
print("dloss/db:", b.grad)

# grad_check rebuilds the computation per evaluation and compares the
# analytic gradient to (f(t+e) - f(t-e)) / 2e for every coordinate.
err = ag.grad_check(lambda: ag.sum_all(ag.tanh(ag.affine(x, w, b))), [w, b])
print("\nmax relative error vs central differences:", err)
assert err < 1e-6

# NaN/Inf checking is on by default; every op validates its output.
try:
    Tensor(np.array([np.inf]))
except ag.NumericError as e:
    print("non-finite values are an error state:", e)
