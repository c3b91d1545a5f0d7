"""How many input bits does a trained SVM need at inference time?

Train a float SVM on the breast-cancer data, then sweep the input word length
B_X with the coefficient word length fixed at B_F = 6.  For each B_X we print
the fixed-point test error, the Monte-Carlo mismatch rate against the float
classifier and the Chebyshev upper bound on that mismatch rate.  The last
lines evaluate the closed-form bit-width bounds for the same model.

    python demos/01_inference_precision.py
"""
from fxsvm import bounds
from fxsvm.datasets import load_uci_breast_cancer
from fxsvm.experiments import run_accuracy_sweep
from fxsvm.svm_float import TrainConfig

data = load_uci_breast_cancer()
cfg = TrainConfig(gamma_log2=5, lam=1.0, epochs=10, seed=0)
sweep = run_accuracy_sweep(data, cfg, b_f=6, b_x_range=range(1, 11), trials=200, seed=0)
meta = sweep.meta

print(f"{data.size} samples, N={data.n_dims}; float test error {meta['float_error']:.3f}, |w| = {meta['w_norm']:.3f}")
print()
print(" B_X  p_e(fixed)  p_m(MC)   p_m bound")
for r in sweep.rows:
    print(f"{r.b_x:4d}  {r.p_e_fx:10.3f}  {r.p_m_hat:7.4f}  {r.pm_bound_capped:10.4f}")

# Once B_X reaches 4 the 10-level UCI attributes are represented almost
# exactly, so the fixed-point error settles at the float error.
print()
print("smallest B_X with p_e <= 0.06:", sweep.knee(0.06))
print("smallest B_X with p_e within 0.01 of float:", sweep.knee(meta["float_error"] + 0.01))

stats = bounds.DatasetStats(**meta["stats"])
print()
print("geometric bound (mean |x|):", meta["geometric_bound_mean_norm"])
print("geometric bound (max |x|): ", meta["geometric_bound_max_norm"])
print("E1 = %.1f, E2 = %.1f" % (stats.e1, stats.e2))
# The B_F term of the Chebyshev bound is df^2 E2 / 24; when it alone exceeds
# the target, no input precision can meet it.
df = 2.0 ** -5
print(f"B_F-only part of the p_m bound at B_F=6: {df**2 * stats.e2 / 24:.4f}")
print("min B_X for p_m <= 0.01:", meta["min_bx_for_pm_0.01"] or "infeasible at B_F=6")
