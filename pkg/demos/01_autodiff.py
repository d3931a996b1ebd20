"""A tour of the tensor engine: build a tiny computation, pull gradients
back through it, and check them against finite differences.

Run: python3 demos/01_autodiff.py
"""

import numpy as np

from onebt.tensor import (Tensor, add, backward, gelu, matmul, mean_axis,
                          mul, softmax_rows)

rng = np.random.default_rng(0)

# A Tensor wraps a numpy array. requires_grad marks it as a leaf we want
# gradients for; everything stays float32 unless you hand in float64.
W = Tensor(rng.standard_normal((3, 4)).astype(np.float32), requires_grad=True)
x = Tensor(rng.standard_normal((2, 3)).astype(np.float32), requires_grad=True)
b = Tensor(np.zeros(4, dtype=np.float32), requires_grad=True)

print("x @ W + b, gelu, row softmax, then mean everything to a scalar:")
h = gelu(add(matmul(x, W), b))          # [2, 4], bias broadcast over rows
p = softmax_rows(h)                     # rows sum to one
loss = mean_axis(mean_axis(mul(p, p), -1), -1)   # a scalar to differentiate
print(f"  loss = {loss.data.item():.6f}")

# Reverse-mode: one call fills .grad on every reachable leaf.
backward(loss)
print(f"  dloss/dW has shape {W.grad.shape}, dloss/dx has shape {x.grad.shape}")

# Spot-check dloss/dW[0, 0] with central differences.
def loss_value():
    h = gelu(add(matmul(x, W), b))
    p = softmax_rows(h)
    return mean_axis(mean_axis(mul(p, p), -1), -1).data.item()

eps = 1e-3
keep = W.data[0, 0]
W.data[0, 0] = keep + eps
up = loss_value()
W.data[0, 0] = keep - eps
dn = loss_value()
W.data[0, 0] = keep
fd = (up - dn) / (2 * eps)
print(f"  analytic dloss/dW[0,0] = {W.grad[0, 0]:+.6f}")
print(f"  finite difference      = {fd:+.6f}")

# Gradients accumulate across backward calls, one contribution per call,
# which is what lets a training loop sum gradients over micro-batches.
W.grad = None
loss1 = mean_axis(mean_axis(matmul(x, W), -1), -1)
backward(loss1)
once = W.grad.copy()
loss2 = mean_axis(mean_axis(matmul(x, W), -1), -1)
backward(loss2)
print(f"  two backward passes accumulate exactly 2x: "
      f"{np.allclose(W.grad, 2 * once)}")
