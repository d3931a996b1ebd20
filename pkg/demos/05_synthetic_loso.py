"""A complete experiment in miniature: synthetic data, leave-one-subject-out
training, and the sanity check that makes the result believable.

The generator plants a band-limited oscillation on the frontal channels
whose amplitude tracks the workload label (strength delta); pink noise,
random sinusoids and per-subject gain provide realistic nuisance structure.
Training on data with delta=1 should generalize across subjects; training
on delta=0 data (no class signal at all) must collapse to coin flipping.

Run: python3 demos/05_synthetic_loso.py   (about half a minute)
"""

from onebt.data import SynthSpec, generate_synthetic
from onebt.harness import run_loso
from onebt.metrics import fmt_mean_std, render_table
from onebt.model import ModelConfig
from onebt.train import TrainConfig

model_cfg = ModelConfig(num_latents=4, latent_dim=16, cross_heads=2,
                        self_heads=2, cross_head_dim=8, self_head_dim=8,
                        num_freq_bands=12, max_freq=128.0, seq_len=128,
                        ff_mult=2, attn_dropout=0.0, ff_dropout=0.0)
train_cfg = TrainConfig(lr=3e-3, weight_decay=0.05, epochs=5, batch_size=32,
                        label_smoothing=0.1, seed=0)

rows = []
summaries = {}
for delta in (1.0, 0.0):
    spec = SynthSpec(n_subjects=11, samples_per_cell=12, delta=delta,
                     seq_len=128, sample_rate_hz=128, amplitude_scale=3.0)
    manifest, samples = generate_synthetic(spec, seed=0)
    per_task = manifest.n_samples // 3
    print(f"delta={delta}: {manifest.n_samples} windows, "
          f"{manifest.n_subjects} subjects, {per_task} per task")

    folds, summary = run_loso(samples, model_cfg, train_cfg,
                              task="IQ", jobs=4)
    summaries[delta] = summary
    accs = " ".join(f"{f.accuracy:.2f}" for f in folds)
    print(f"  per-fold accuracy (held-out subject 0..{len(folds) - 1}): {accs}")
    rows.append([f"{delta:g}", summary.n_folds,
                 fmt_mean_std(summary.accuracy_mean, summary.accuracy_std),
                 fmt_mean_std(summary.precision_mean, summary.precision_std),
                 fmt_mean_std(summary.f1_mean, summary.f1_std)])

print()
print(render_table(["delta", "folds", "accuracy", "precision", "f1"], rows))
print()
print("delta=1 generalizes to unseen subjects; delta=0 sits at chance, so")
print("the pipeline is measuring the planted signal, not leaking labels.")

# The whole run is a pure function of (spec, seeds): run it again and every
# number above reproduces bit for bit. Fold seeds derive from the run seed
# and the held-out subject, so parallel and serial execution agree too.
spec = SynthSpec(n_subjects=11, samples_per_cell=12, delta=1.0,
                 seq_len=128, sample_rate_hz=128, amplitude_scale=3.0)
_, samples = generate_synthetic(spec, seed=0)
_, again = run_loso(samples, model_cfg, train_cfg, task="IQ", jobs=1)
print(f"\nserial rerun reproduces the parallel summary exactly: "
      f"{again == summaries[1.0]}")
