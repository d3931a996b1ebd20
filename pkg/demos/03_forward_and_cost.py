"""One forward pass through the default model, and where its compute goes.

The architecture in one breath: a handful of learned latent vectors
cross-attend once to the token sequence (this is the only place sequence
length enters the cost), a short stack of latent self-attention blocks
refines them, and the classifier reads the mean latent.

Run: python3 demos/03_forward_and_cost.py
"""

import numpy as np

from onebt.cost import cost_report
from onebt.model import ModelConfig, init_parameters

cfg = ModelConfig()          # 16 latents of width 128, one block of each kind
model = init_parameters(cfg, seed=0)

rng = np.random.default_rng(0)
X = rng.standard_normal((4, cfg.seq_len, cfg.input_channels)).astype(np.float32)
logits = model.forward(X)
print(f"input  [{X.shape[0]}, {X.shape[1]}, {X.shape[2]}] "
      f"(batch, time, channels)")
print(f"logits [{logits.shape[0]}, {logits.shape[1]}]:")
print(np.array2string(logits.data, precision=3))

probs = np.exp(logits.data) / np.exp(logits.data).sum(-1, keepdims=True)
print("softmax:", np.array2string(probs, precision=3))

rep = cost_report(cfg)
print(f"\n{rep.params:,} parameters ({rep.params_m:.2f}M), "
      f"{rep.flops:,} FLOPs per window ({rep.gflops:.2f} GFLOPs)")
print(f"counting convention: {rep.convention}")

print("\nparameter breakdown:")
for part, n in sorted(rep.breakdown["params"].items(), key=lambda kv: -kv[1]):
    print(f"  {part:18s} {n:9,}  {100 * n / rep.params:5.1f}%")

print("\nFLOP breakdown:")
for part, n in sorted(rep.breakdown["flops"].items(), key=lambda kv: -kv[1]):
    print(f"  {part:18s} {n:11,}  {100 * n / rep.flops:5.1f}%")

# The cross-attention keys/values touch every token, so compute scales with
# the window, while the parameter count does not.
wide = cost_report(ModelConfig(seq_len=2 * cfg.seq_len))
print(f"\ndoubling the window: params {rep.params:,} -> {wide.params:,} "
      f"(unchanged), FLOPs x{wide.flops / rep.flops:.2f}")
