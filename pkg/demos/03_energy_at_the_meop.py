"""Energy per classification-and-update as a function of supply voltage.

The datapath energy has a dynamic part that falls with V_dd^2 and a leakage
part that grows as the clock slows down near threshold.  The script prints
both parts across the voltage range for the minimum-precision design and
then compares three precision assignments at their own minimum-energy points.

    python demos/03_energy_at_the_meop.py
"""
from fxsvm import energy
from fxsvm.experiments import run_energy_study
from fxsvm.svm_fixed import PrecisionConfig

counts = energy.arch_counts(9, PrecisionConfig(5, 6, 10), gamma_log2=5)
print(f"B_X=5, B_F=6, B_W=10, N=9: {counts.n_fa:.0f} full adders, critical path {counts.l_fa:.2f} FA delays")
print()
print(" V_dd   dynamic (fJ)  leakage (fJ)  total (fJ)")
for v in (0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.8, 1.0):
    r = energy.energy_at(v, counts)
    print(f"{v:5.2f}  {r.e_dynamic * 1e15:12.2f}  {r.e_leakage * 1e15:12.2f}  {r.e_total * 1e15:10.2f}")

study = run_energy_study()
print()
print("precision (B_X/B_F/B_W)  V* (V)  E at V* (fJ)  relative")
for row in study.rows:
    tag = f"{row.b_x}/{row.b_f}/{row.b_w}"
    print(f"{tag:>23s}  {row.v_star:6.3f}  {row.e_meop * 1e15:12.2f}  {row.ratio_vs_first:8.3f}")
print()
print(f"16-bit vs minimum precision: {study.meta['ratio_last_vs_first_computed']:.2f}x from this model; "
      f"the published figure is {study.meta['ratio_16bit_published']}x")
