"""What happens when the weight-update word length is too short?

With step size gamma = 2^-k the update gamma * y * x needs B_W = B_X + k bits
to be represented exactly.  Below that, truncation swallows part of each
step.  This script first shows the per-input increments in the three
degenerate regimes, then trains on the breast-cancer data at several B_W
and prints the windowed loss next to the float run.

    python demos/02_training_below_the_bound.py
"""
from fxsvm.bounds import min_bw, regime_of
from fxsvm.datasets import load_uci_breast_cancer
from fxsvm.experiments import run_convergence_study
from fxsvm.quant import QGrid
from fxsvm.svm_fixed import PrecisionConfig, effective_update
from fxsvm.svm_float import TrainConfig

k, b_x = 4, 3
print(f"gamma = 2^-{k}; increments in units of gamma for every 3-bit input x~ = y*x")
print("   x~    " + "  ".join(f"B_W={bw:<3d}" for bw in (k, k + 1, k + 2, k + b_x)))
for xt in QGrid.signed(b_x).points():
    incs = [effective_update(xt, k, bw, b_x=b_x) * 2**k for bw in (k, k + 1, k + 2, k + b_x)]
    print(f"{xt:6.2f}   " + "  ".join(f"{v:+7.3f}" for v in incs))
print(f"(B_W={k + b_x} is the exact bound; B_W={k} moves only downward, in steps of 2*gamma)")

data = load_uci_breast_cancer()
cfg = TrainConfig(gamma_log2=5, lam=1.0, epochs=10)
conv = run_convergence_study(data, cfg, PrecisionConfig(6, 6), [11, 10, 7, 6, 5])
print()
print(f"B_X = 6, gamma = 2^-5: exact updates need B_W >= {min_bw(6, 5)}")
print("   run            regime           early loss  final loss  test error")
print(f"   float          {'':16s} {conv.early('float'):10.4f}  {conv.final('float'):10.4f}  "
      f"{conv.test_errors['float']:.3f}")
for bw in sorted(conv.traces, reverse=True):
    print(f"   B_W={bw:<2d}        {str(regime_of(bw, 5, 6)):16s} {conv.early(bw):10.4f}  "
          f"{conv.final(bw):10.4f}  {conv.test_errors[bw]:.3f}")
