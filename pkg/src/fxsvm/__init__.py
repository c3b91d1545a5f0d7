"""Fixed-point SVM trained online by SGD: simulation, precision bounds and energy model."""
from .bounds import (BitBound, DatasetStats, Regime, dataset_stats, geometric_min_bf, geometric_min_bx,
                     geometric_min_bx_dataset, min_bw, min_bx_for_target, pe_upper_bound, pm_upper_bound,
                     regime_of)
from .datasets import Dataset, DataError, generate_synthetic, load_csv, load_uci_breast_cancer, split
from .energy import ArchCounts, ElectricalParams, EnergyReport, arch_counts, energy_at, energy_ratio, meop
from .quant import QGrid, quantize_nearest, sample_quant_noise, truncate_floor
from .svm_fixed import (MismatchReport, PrecisionConfig, classify_fx, effective_update, mismatch_mc,
                        train_fx)
from .svm_float import LossTrace, Model, TrainConfig, classify, error_rate, loss, sgd_step, train

__version__ = "0.1.0"
