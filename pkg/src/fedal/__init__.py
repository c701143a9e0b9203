"""Deterministic federated active learning simulator and benchmark harness."""

from .active import (PoolState, QueryBudget, Strategy, annotate_and_move,
                     compute_budget, ensemble_entropy_scores, init_pool,
                     query, select_top_k, shannon_entropy)
from .config import ExperimentConfig, parse_config
from .data import (ClientData, DatasetSpec, FederatedDataset, generate,
                   load_samples_csv, save_samples_csv, split, four_hospital_spec)
from .federation import (BASELINE_MODES, FinalReport, FLClientState,
                         RoundRecord, RunHistory, RunSettings, Schedule,
                         fedavg_aggregate, run_client_round, run_experiment,
                         run_round)
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import (EvalRecord, auc_ovr_macro, confusion_matrix,
                      cross_client_macro, evaluate_model, macro_f1, micro_f1,
                      paired_t_test, per_class_f1)
from .model import (Batch, ModelParams, OptimizerState, adam_update,
                    backprop_grad, cross_entropy_loss, forward_probs,
                    init_adam, init_params, predict_proba, train_local)

__version__ = "0.1.0"
