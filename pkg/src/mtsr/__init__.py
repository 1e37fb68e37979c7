"""Multi-task support recovery in the Normal means model.

Thresholding estimators (l1, l1/l2, l1/linf and their union), analytic
penalty and signal-level calibration, the minimax lower bound, and a
reproducible Monte-Carlo harness for the phase-transition experiments.
"""

from .backend import COMPILED
from .calibration import CalibrationInvalid, CalibrationReport, calibrate
from .estimators import (MeanEstimate, estimate_group_l2, estimate_lasso,
                         extract_support, soft_threshold_scalar, support_group_l2,
                         support_group_linf, support_lasso, union_support)
from .experiment import (OrderingReport, SweepCell, SweepConfig, SweepResult,
                         TransitionWindow, compare_procedures, run_sweep,
                         transition_window, type_one_experiment, wilson_interval,
                         windows_compatible)
from .model import (Instance, ProblemConfig, SupportSet, config_for_cell,
                    effective_sigma, experiment_dimensions, generate_instance,
                    row_activation_counts)
from .theory import (LowerBoundReport, binomial_zero_prob, chernoff_lower_tail,
                     mu_lower_bound, pi_k, theorem3_c)

__version__ = "0.1.0"
