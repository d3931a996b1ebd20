"""The ablation grids as cost tables: what each knob buys and what it costs.

Four preset grids vary one axis at a time around the 32-latent, 128-wide
baseline: self-attention depth, self-attention heads, latent geometry, and
attention head widths. Reading the closed forms side by side shows which
knobs move parameters, which move compute, and which move neither.

Run: python3 demos/04_cost_tables.py
"""

from onebt.cost import TABLE_PRESETS, cost_report
from onebt.metrics import render_table

for table, caption in (
        ("table1", "self-attention blocks per cross block"),
        ("table2", "self-attention heads (one block)"),
        ("table3", "latent count x latent width"),
        ("table4", "cross/self head widths"),
):
    rows = []
    for label, cfg in TABLE_PRESETS[table]:
        rep = cost_report(cfg)
        rows.append([label, f"{rep.params_m:.2f}", f"{rep.gflops:.2f}",
                     f"{rep.params:,}", f"{rep.flops:,}"])
    print(f"{table}: {caption}")
    print(render_table(["config", "Params(M)", "GFLOPs", "params", "flops"],
                       rows))
    print()

# Two structural facts fall straight out of the closed forms.

counts = {int(label.split("=")[1]): cost_report(cfg).params
          for label, cfg in TABLE_PRESETS["table1"]}
nblocks = sorted(counts)
per_block = {(counts[b] - counts[a]) // (b - a)
             for a, b in zip(nblocks, nblocks[1:])}
print(f"every added self-attention block costs exactly "
      f"{per_block.pop():,} parameters (the depth column is affine)")

f32 = cost_report(dict(TABLE_PRESETS["table2"])["self_heads=1"]).flops
f16 = cost_report(dict(TABLE_PRESETS["table3"])["latents=16,dim=128"]).flops
print(f"halving 32 latents to 16 at width 128 cuts compute x{f32 / f16:.3f}, "
      "less than 2x because the token key/value projections are shared work "
      "that does not depend on the latent count")
