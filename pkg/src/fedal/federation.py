"""Synchronous federated rounds with periodic active learning.

One round: the server broadcasts the global model, every client (possibly
in a thread pool) runs an optional query/annotate step followed by E
local epochs starting from the broadcast weights, and the server averages
the returned parameter vectors weighted by current labeled counts. The
client keeps its trained weights as the local ensemble member for the
next query step.

Baseline modes reuse the same loop: ``full_data`` starts fully labeled
with no querying, ``centralized`` merges every client's training data
into one pseudo-client, and ``localized`` trains clients independently
with no aggregation.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .active import (PoolState, Strategy, annotate_and_move, compute_budget,
                     init_pool, query)
from .data import ClientData, FederatedDataset
from .errors import ConfigurationError, ShapeError
from .metrics import (EvalRecord, confusion_matrix, cross_client_macro,
                      evaluate_model, macro_f1)
from .model import (Batch, ModelParams, init_adam, init_params,
                    predict_proba, train_local)
from .rngs import NS_MODEL, NS_POOL, NS_QUERY, NS_TRAIN, stream

MODE_FEDAL = "fedal"
MODE_FULL_DATA = "full_data"
MODE_CENTRALIZED = "centralized"
MODE_LOCALIZED = "localized"
BASELINE_MODES = (MODE_FULL_DATA, MODE_CENTRALIZED, MODE_LOCALIZED)


@dataclass(frozen=True)
class Schedule:
    """Round counts: T total, E local epochs, query every K-th round up to
    al_last_round, then a fine-tune tail with frozen pools."""

    total_rounds: int
    local_epochs: int
    al_interval: int
    al_last_round: int

    def __post_init__(self):
        if self.total_rounds < 1:
            raise ConfigurationError(f"total_rounds must be >= 1, got {self.total_rounds}")
        if self.local_epochs < 0:
            raise ConfigurationError(f"local_epochs must be >= 0, got {self.local_epochs}")
        if self.al_interval < 1:
            raise ConfigurationError(f"al_interval must be >= 1, got {self.al_interval}")
        if not 0 <= self.al_last_round <= self.total_rounds:
            raise ConfigurationError(
                f"al_last_round must lie in [0, total_rounds], got {self.al_last_round}")

    @property
    def total_al_rounds(self):
        return self.al_last_round // self.al_interval

    def is_al_round(self, t):
        return t % self.al_interval == 0 and t <= self.al_last_round

    def al_round_index(self, t):
        """1-based count of query rounds up to and including round t."""
        return t // self.al_interval


@dataclass(frozen=True)
class RunSettings:
    schedule: Schedule
    strategy: Strategy
    gamma: float
    init_label_fraction: float
    hidden_dims: tuple = (32,)
    batch_size: int = 32
    learning_rate: float = 2e-4
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    parallel_clients: bool = False


@dataclass(frozen=True)
class FLClientState:
    client_id: int
    pool: PoolState
    cached_local_params: ModelParams
    opt_state: object


@dataclass(frozen=True)
class RoundRecord:
    round: int
    global_sample_ratio: float
    val_macro_f1: float
    test_records: tuple  # per-client EvalRecord
    macro_record: EvalRecord
    annotated: tuple  # per-client count annotated this round


@dataclass(frozen=True)
class FinalReport:
    best_round: int
    best_val_macro_f1: float
    test_records: tuple
    macro_record: EvalRecord


@dataclass(frozen=True)
class RunHistory:
    mode: str
    rounds: tuple
    final: FinalReport
    pool_summary: tuple  # per-client (init_labeled, init_unlabeled, final_labeled)


def fedavg_aggregate(client_params, client_weights) -> ModelParams:
    """Weighted elementwise mean of parameter vectors."""
    client_params = list(client_params)
    weights = np.asarray(list(client_weights), dtype=np.float64)
    if not client_params or len(client_params) != len(weights):
        raise ConfigurationError("need matching, nonempty params and weights")
    if np.any(weights < 0):
        raise ConfigurationError("client weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise ConfigurationError("client weights must not all be zero")
    dims = client_params[0].layer_dims
    if any(p.layer_dims != dims for p in client_params):
        raise ShapeError("all client models must share layer dims")
    stacked = np.stack([p.weights for p in client_params])
    merged = (weights / total) @ stacked
    return ModelParams(dims, merged)


def run_client_round(client: FLClientState, incoming_global: ModelParams,
                     schedule: Schedule, round_index: int, data: ClientData,
                     strategy, budget, batch_size, seed):
    """One client's work unit. Returns (new_state, outgoing_params, n_annotated)."""
    pool = client.pool
    n_annotated = 0
    if strategy is not None and budget is not None and schedule.is_al_round(round_index):
        amount = budget.amount(schedule.al_round_index(round_index))
        rng = stream(seed, NS_QUERY, client.client_id, round_index)
        selected = query(strategy, pool, client.cached_local_params,
                         incoming_global, amount, data.train_features, rng)
        pool = annotate_and_move(pool, selected)
        n_annotated = len(selected)
    if pool.n_labeled == 0:
        raise ConfigurationError(
            f"client {client.client_id} has an empty labeled pool; "
            "raise init_label_fraction")
    batch = Batch(data.train_features[pool.labeled], data.train_labels[pool.labeled])
    rng = stream(seed, NS_TRAIN, client.client_id, round_index)
    params, opt_state = train_local(incoming_global, client.opt_state, batch,
                                    schedule.local_epochs, batch_size, rng)
    new_state = replace(client, pool=pool, cached_local_params=params,
                        opt_state=opt_state)
    return new_state, params, n_annotated


def _val_macro_f1(params, data: ClientData):
    probs = predict_proba(params, data.val_features)
    cm = confusion_matrix(data.val_labels, probs.argmax(axis=1), params.num_classes)
    return macro_f1(cm)


def _client_work(args):
    return run_client_round(*args)


def run_round(global_params, clients, dataset: FederatedDataset, schedule,
              round_index, strategy, budgets, settings: RunSettings, seed,
              aggregate=True, broadcast=True, eval_dataset=None,
              eval_ratio=None):
    """Advance every client one round; aggregate and evaluate.

    ``broadcast=False`` (localized mode) trains each client from its own
    cached parameters and skips aggregation. ``eval_dataset`` overrides
    where the round evaluation happens (centralized mode trains on a
    merged pseudo-client but scores on the real clients, with
    ``eval_ratio`` as the reported per-client sample ratio).
    """
    jobs = []
    for client in clients:
        incoming = global_params if broadcast else client.cached_local_params
        budget = budgets[client.client_id] if budgets is not None else None
        jobs.append((client, incoming, schedule, round_index,
                     dataset.clients[client.client_id], strategy, budget,
                     settings.batch_size, seed))
    if settings.parallel_clients and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_client_work, jobs))
    else:
        results = [_client_work(job) for job in jobs]
    new_clients = tuple(r[0] for r in results)
    annotated = tuple(r[2] for r in results)

    if aggregate:
        new_global = fedavg_aggregate(
            [r[1] for r in results], [c.pool.n_labeled for c in new_clients])
    else:
        new_global = global_params

    total_labeled = sum(c.pool.n_labeled for c in new_clients)
    total_train = sum(cd.n_train for cd in dataset.clients)
    global_ratio = total_labeled / total_train

    test_records = []
    val_scores = []
    own_models = not (aggregate or broadcast)
    for m, cd in enumerate((eval_dataset or dataset).clients):
        eval_params = new_clients[m].cached_local_params if own_models else new_global
        if eval_ratio is not None:
            ratio = eval_ratio
        else:
            ratio = new_clients[m].pool.n_labeled / dataset.clients[m].n_train
        test_records.append(evaluate_model(
            eval_params, cd.test_features, cd.test_labels, m, round_index, ratio))
        val_scores.append(_val_macro_f1(eval_params, cd))
    macro_record = replace(cross_client_macro(test_records),
                           sample_ratio=global_ratio)
    record = RoundRecord(
        round=round_index,
        global_sample_ratio=global_ratio,
        val_macro_f1=float(np.mean(val_scores)),
        test_records=tuple(test_records),
        macro_record=macro_record,
        annotated=annotated,
    )
    return new_global, new_clients, record


def _merged_training_client(dataset: FederatedDataset) -> ClientData:
    """All clients' training data pooled; val/test stay per real client."""
    feats = np.concatenate([cd.train_features for cd in dataset.clients])
    labels = np.concatenate([cd.train_labels for cd in dataset.clients])
    empty = np.empty((0, dataset.feature_dim))
    empty_y = np.empty(0, dtype=np.int64)
    return ClientData(feats, labels, empty, empty_y, empty, empty_y)


def _full_pool(n):
    return PoolState(np.arange(n, dtype=np.int64), np.empty(0, dtype=np.int64), 0)


def run_experiment(dataset: FederatedDataset, settings: RunSettings, seed: int,
                   mode: str = MODE_FEDAL) -> RunHistory:
    """Run the full schedule and report the best-validation model's tests."""
    if mode not in (MODE_FEDAL,) + BASELINE_MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    schedule = settings.schedule
    dims = (dataset.feature_dim, *settings.hidden_dims, dataset.num_classes)
    psi = init_params(dims, stream(seed, NS_MODEL))

    def fresh_optimizer():
        return init_adam(psi, settings.learning_rate, settings.beta1,
                         settings.beta2, settings.epsilon, settings.weight_decay)

    strategy = None
    budgets = None
    if mode == MODE_FEDAL:
        strategy = settings.strategy
        pools = [
            init_pool(cd.train_labels, settings.init_label_fraction,
                      dataset.num_classes, stream(seed, NS_POOL, m))
            for m, cd in enumerate(dataset.clients)
        ]
        if schedule.total_al_rounds > 0:
            budgets = [compute_budget(p.initial_unlabeled_count, settings.gamma,
                                      schedule.total_al_rounds) for p in pools]
        clients = tuple(
            FLClientState(m, pool, psi, fresh_optimizer())
            for m, pool in enumerate(pools))
        run_dataset = dataset
        aggregate, broadcast = True, True
    elif mode == MODE_FULL_DATA:
        clients = tuple(
            FLClientState(m, _full_pool(cd.n_train), psi, fresh_optimizer())
            for m, cd in enumerate(dataset.clients))
        run_dataset = dataset
        aggregate, broadcast = True, True
    elif mode == MODE_CENTRALIZED:
        merged = _merged_training_client(dataset)
        run_dataset = FederatedDataset((merged,), dataset.num_classes,
                                       dataset.feature_dim)
        clients = (FLClientState(0, _full_pool(merged.n_train), psi,
                                 fresh_optimizer()),)
        aggregate, broadcast = True, True
    else:  # localized
        clients = tuple(
            FLClientState(m, _full_pool(cd.n_train), psi, fresh_optimizer())
            for m, cd in enumerate(dataset.clients))
        run_dataset = dataset
        aggregate, broadcast = False, False

    init_pools = tuple((c.pool.n_labeled, c.pool.initial_unlabeled_count)
                       for c in clients)
    eval_dataset = dataset if mode == MODE_CENTRALIZED else None
    eval_ratio = 1.0 if mode == MODE_CENTRALIZED else None

    rounds = []
    best_round = 0
    best_val = -np.inf
    for t in range(1, schedule.total_rounds + 1):
        psi, clients, record = run_round(
            psi, clients, run_dataset, schedule, t, strategy, budgets,
            settings, seed, aggregate=aggregate, broadcast=broadcast,
            eval_dataset=eval_dataset, eval_ratio=eval_ratio)
        rounds.append(record)
        if record.val_macro_f1 > best_val:
            best_val = record.val_macro_f1
            best_round = t

    best_record = rounds[best_round - 1]
    final = FinalReport(
        best_round=best_round,
        best_val_macro_f1=best_val,
        test_records=best_record.test_records,
        macro_record=best_record.macro_record,
    )
    pool_summary = tuple(
        (init_labeled, init_unlabeled, c.pool.n_labeled)
        for (init_labeled, init_unlabeled), c in zip(init_pools, clients))
    return RunHistory(mode=mode, rounds=tuple(rounds), final=final,
                      pool_summary=pool_summary)
