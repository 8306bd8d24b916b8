"""
Active-learning loop with pluggable query strategy and augmentation.

One run:
1. Label ``n_init`` uniformly drawn samples and train the initial model.
2. Each round, draw up to ``n_sub`` candidates from the unlabeled pool,
   let the strategy pick ``n_query`` of them, label them with the oracle,
   add adversarial copies (carrying the source's oracle label) according
   to the augmentation mode and retrain from scratch on everything labeled.
3. Record test accuracy and per-phase statistics for every round.

Augmented points never return to the unlabeled pool and never cost oracle
calls; ``run_experiment`` checks the label budget at the end of each run.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    AUGMENT_FGSM, AUGMENT_NATIVE, AUGMENT_NONE, AUGMENTATIONS,
    DEFAULT_DIVERSITY_CAP, DEFAULT_FGSM_EPS_HIGH, DEFAULT_FGSM_EPS_LOW, DEFAULT_FIXED_QUERY_EPS,
    DEFAULT_HIDDEN_DIM, DEFAULT_MARGIN_SLACK, DEFAULT_N_ADV, DEFAULT_N_QUERY, DEFAULT_N_SUB,
    DEFAULT_ROUNDS, DEFAULT_RUNS, NATIVE_STRATEGIES, STRATEGIES, STRATEGY_RANDOM,
)
from ..errors import AdvdalError, InvalidArgumentError
from .attacks import AttackParams, fgsm_sweep
from .datasets import Dataset, DatasetSpec, load_dataset
from .network import AdamState, MlpModel, TrainConfig, accuracy, train
from .strategies import Byproduct, Candidates, select, select_random
from .utils import derive_seed, parallel_map, resolve_workers
from .verifier import HarvestParams, HarvestResult, harvest

logger = logging.getLogger(__name__)

_INIT_TAG = 0
_SHUFFLE_TAG = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of one (strategy, augmentation) experiment cell."""

    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    strategy: str = STRATEGY_RANDOM
    augmentation: str = AUGMENT_NONE
    n_init: int = DEFAULT_N_QUERY
    rounds: int = DEFAULT_ROUNDS
    n_sub: int = DEFAULT_N_SUB
    n_query: int = DEFAULT_N_QUERY
    n_adv: int = DEFAULT_N_ADV
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    train: TrainConfig = field(default_factory=TrainConfig)
    attack: AttackParams = field(default_factory=AttackParams)
    harvest: HarvestParams = field(default_factory=HarvestParams)
    fgsm_eps_range: Tuple[float, float] = (DEFAULT_FGSM_EPS_LOW, DEFAULT_FGSM_EPS_HIGH)
    fixed_query_eps: float = DEFAULT_FIXED_QUERY_EPS
    margin_slack: float = DEFAULT_MARGIN_SLACK
    seed: int = 0
    runs: int = DEFAULT_RUNS
    workers: int = 1
    record_timings: bool = False
    diversity_cap: int = DEFAULT_DIVERSITY_CAP

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"unknown strategy {self.strategy!r}")
        if self.augmentation not in AUGMENTATIONS:
            raise InvalidArgumentError(f"unknown augmentation {self.augmentation!r}")
        if self.augmentation == AUGMENT_NATIVE and self.strategy not in NATIVE_STRATEGIES:
            raise InvalidArgumentError(f"{AUGMENT_NATIVE} needs one of {', '.join(NATIVE_STRATEGIES)}")
        for name in ("n_init", "n_sub", "n_query", "n_adv", "hidden_dim", "runs", "diversity_cap"):
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_sub < self.n_query:
            raise InvalidArgumentError(f"n_sub must be at least n_query, got n_sub={self.n_sub} n_query={self.n_query}")
        if self.rounds < 0:
            raise InvalidArgumentError(f"rounds must be non-negative, got {self.rounds}")
        low, high = self.fgsm_eps_range
        if not 0 <= low <= high <= 1:
            raise InvalidArgumentError(f"fgsm_eps_range must satisfy 0 <= low <= high <= 1, got {self.fgsm_eps_range}")
        if not self.fixed_query_eps > 0:
            raise InvalidArgumentError("fixed_query_eps must be positive")
        if self.margin_slack < 0:
            raise InvalidArgumentError("margin_slack must be non-negative")

    @property
    def cell(self) -> str:
        return f"{self.strategy}-{self.augmentation}"


@dataclass(frozen=True)
class RoundRecord:
    run: int
    round: int
    labeled: int
    accuracy: float
    adv_added: int = 0
    sat: int = 0
    unsat: int = 0
    timeout: int = 0
    select_ms: float = 0.0
    verify_ms: float = 0.0
    train_ms: float = 0.0


@dataclass(eq=False)
class RunResult:
    run: int
    seed: int
    records: List[RoundRecord]
    model: MlpModel
    adversarial_sets: List[List[np.ndarray]] = field(default_factory=list)
    oracle_calls: int = 0


@dataclass(eq=False)
class ExperimentResult:
    config: ExperimentConfig
    runs: List[RunResult]

    @property
    def records(self) -> List[RoundRecord]:
        return [record for run in self.runs for record in run.records]


class Oracle:
    """Simulated annotator backed by dataset ground truth; counts every label handed out."""

    def __init__(self, dataset: Dataset):
        self._labels = dataset.labels
        self.calls = 0

    def label(self, ids: Sequence[int]) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        self.calls += len(ids)
        return self._labels[ids].copy()


class Pool:
    """Labeled/unlabeled bookkeeping over a training set with stable ids."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self._unlabeled = np.ones(len(dataset), dtype=bool)
        self._labeled_ids: List[int] = []
        self._labeled_labels: List[int] = []
        self._extra_features: List[np.ndarray] = []
        self._extra_labels: List[int] = []

    @property
    def unlabeled_ids(self) -> np.ndarray:
        return np.flatnonzero(self._unlabeled)

    @property
    def labeled_count(self) -> int:
        return len(self._labeled_ids)

    @property
    def augmented_count(self) -> int:
        return len(self._extra_labels)

    def mark_labeled(self, ids: Sequence[int], labels: Sequence[int]) -> None:
        for sample_id, label in zip(ids, labels):
            if not self._unlabeled[sample_id]:
                raise InvalidArgumentError(f"sample {sample_id} is already labeled")
            self._unlabeled[sample_id] = False
            self._labeled_ids.append(int(sample_id))
            self._labeled_labels.append(int(label))

    def add_augmented(self, points: Sequence[np.ndarray], label: int) -> None:
        for point in points:
            self._extra_features.append(np.asarray(point, dtype=np.float64))
            self._extra_labels.append(int(label))

    def training_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        features = self.dataset.features[self._labeled_ids]
        labels = np.asarray(self._labeled_labels, dtype=np.int64)
        if self._extra_features:
            features = np.vstack([features, np.stack(self._extra_features)])
            labels = np.concatenate([labels, np.asarray(self._extra_labels, dtype=np.int64)])
        return features, labels


@dataclass(eq=False)
class AugmentResult:
    """Adversarial points per source (in source order) plus verifier verdict counts."""

    points: List[List[np.ndarray]]
    sat: int = 0
    unsat: int = 0
    timeout: int = 0

    @property
    def total(self) -> int:
        return sum(len(p) for p in self.points)


def _native_point(config: ExperimentConfig, byproduct: Optional[Byproduct]) -> Optional[np.ndarray]:
    if config.strategy in NATIVE_STRATEGIES and byproduct is not None:
        return byproduct.adversarial
    return None


def augment(
    model: MlpModel,
    sources: np.ndarray,
    byproducts: Sequence[Optional[Byproduct]],
    config: ExperimentConfig,
    workers: int = 1,
) -> AugmentResult:
    """Generate the extra training points for a freshly labeled batch.

    Parameters
    ----------
    model : MlpModel
        The model that selected the batch
    sources : np.ndarray
        Feature rows of the selected samples
    byproducts : Sequence[Optional[Byproduct]]
        Strategy output aligned with ``sources``
    config : ExperimentConfig
        Mode, ``n_adv``, epsilon seeding and harvest limits
    workers : int
        Worker threads for per-source generation

    Returns
    -------
    AugmentResult
        Points for each source; callers label them with the source's oracle label
    """
    mode = config.augmentation
    if mode == AUGMENT_NONE:
        return AugmentResult([[] for _ in range(len(sources))])

    def generate(index: int) -> Tuple[List[np.ndarray], Optional[HarvestResult]]:
        byproduct = byproducts[index]
        native = _native_point(config, byproduct)
        points: List[np.ndarray] = [native] if native is not None else []
        if mode == AUGMENT_NATIVE:
            return points, None
        budget = config.n_adv - len(points)
        if budget <= 0:
            return points, None
        x = sources[index]
        if mode == AUGMENT_FGSM:
            low, high = config.fgsm_eps_range
            seen = {p.tobytes() for p in points}
            for point in fgsm_sweep(model, x, np.linspace(low, high, budget)):
                if point.tobytes() not in seen:
                    points.append(point)
            return points, None
        if byproduct is not None and byproduct.margin is not None:
            eps0 = byproduct.margin + config.margin_slack
        else:
            eps0 = config.fixed_query_eps
        result = harvest(model, x, replace(config.harvest, k=budget), eps0)
        return points + result.points, result

    outcomes = parallel_map(generate, range(len(sources)), workers)
    augmented = AugmentResult([points for points, _ in outcomes])
    for _, result in outcomes:
        if result is not None:
            augmented.sat += result.sat
            augmented.unsat += result.unsat
            augmented.timeout += result.timeout
    return augmented


def _fit(config: ExperimentConfig, pool: Pool, input_dim: int, num_classes: int, run_seed: int, t: int) -> MlpModel:
    features, labels = pool.training_arrays()
    model = MlpModel.initialize(input_dim, config.hidden_dim, num_classes, derive_seed(run_seed, t, _INIT_TAG))
    cfg = replace(config.train, seed=derive_seed(run_seed, t, _SHUFFLE_TAG))
    model, _ = train(model, AdamState.zeros_like(model), features, labels, cfg)
    return model


def _millis(config: ExperimentConfig, started: float) -> float:
    return (time.perf_counter() - started) * 1000.0 if config.record_timings else 0.0


def run_single(
    config: ExperimentConfig,
    train_set: Dataset,
    test_set: Dataset,
    run: int,
    on_round: Optional[Callable[[RoundRecord], None]] = None,
) -> RunResult:
    """Execute one seeded run of the loop."""
    run_seed = config.seed + run
    rng = np.random.default_rng(run_seed)
    workers = resolve_workers(config.workers)
    pool = Pool(train_set)
    oracle = Oracle(train_set)

    if config.n_init > len(train_set):
        raise InvalidArgumentError(f"n_init={config.n_init} exceeds the {len(train_set)} training samples")
    initial = select_random(pool.unlabeled_ids, config.n_init, rng).chosen_ids
    pool.mark_labeled(initial, oracle.label(initial))

    started = time.perf_counter()
    model = _fit(config, pool, train_set.input_dim, train_set.num_classes, run_seed, 0)
    records = [RoundRecord(run, 0, pool.labeled_count, accuracy(model, test_set), train_ms=_millis(config, started))]
    if on_round:
        on_round(records[-1])
    final_sets: List[List[np.ndarray]] = []
    completed = 0

    for t in range(1, config.rounds + 1):
        unlabeled = pool.unlabeled_ids
        if len(unlabeled) < config.n_query:
            logger.info(f"[{config.cell}] run {run}: pool exhausted after round {t - 1}")
            break
        size = min(config.n_sub, len(unlabeled))
        candidate_ids = np.sort(rng.choice(unlabeled, size=size, replace=False))
        candidates = Candidates(candidate_ids, train_set.features[candidate_ids])

        started = time.perf_counter()
        selection = select(config.strategy, model, candidates, config.n_query, rng, config.attack, workers)
        select_ms = _millis(config, started)
        chosen = selection.chosen_ids
        labels = oracle.label(chosen)
        pool.mark_labeled(chosen, labels)

        started = time.perf_counter()
        augmented = augment(
            model,
            train_set.features[chosen],
            [selection.byproducts.get(i) for i in chosen],
            config,
            workers,
        )
        verify_ms = _millis(config, started)
        for points, label in zip(augmented.points, labels):
            pool.add_augmented(points, int(label))
        final_sets = augmented.points

        started = time.perf_counter()
        model = _fit(config, pool, train_set.input_dim, train_set.num_classes, run_seed, t)
        train_ms = _millis(config, started)

        record = RoundRecord(
            run=run,
            round=t,
            labeled=pool.labeled_count,
            accuracy=accuracy(model, test_set),
            adv_added=augmented.total,
            sat=augmented.sat,
            unsat=augmented.unsat,
            timeout=augmented.timeout,
            select_ms=select_ms,
            verify_ms=verify_ms,
            train_ms=train_ms,
        )
        records.append(record)
        completed = t
        logger.info(
            f"[{config.cell}] run {run} round {t}: labeled={record.labeled} "
            f"accuracy={record.accuracy:.4f} adv={record.adv_added}"
        )
        if on_round:
            on_round(record)

    expected = config.n_init + completed * config.n_query
    if oracle.calls != expected:
        raise AdvdalError(f"label budget violated: {oracle.calls} oracle calls, expected {expected}")
    return RunResult(run, run_seed, records, model, final_sets, oracle.calls)


def run_experiment(
    config: ExperimentConfig,
    data: Optional[Tuple[Dataset, Dataset]] = None,
    on_round: Optional[Callable[[RoundRecord], None]] = None,
) -> ExperimentResult:
    """Run ``config.runs`` seeded repetitions of the active-learning loop.

    Parameters
    ----------
    config : ExperimentConfig
        Cell configuration
    data : Tuple[Dataset, Dataset], optional
        Preloaded (train, test) pair; loaded from ``config.dataset`` otherwise
    on_round : Callable[[RoundRecord], None], optional
        Called after every recorded round, in order

    Returns
    -------
    ExperimentResult
        Records for every run and round plus each run's final model and
        final-round adversarial sets
    """
    train_set, test_set = data if data is not None else load_dataset(config.dataset)
    if len(test_set) == 0:
        raise InvalidArgumentError("test split is empty")
    runs = [run_single(config, train_set, test_set, r, on_round) for r in range(config.runs)]
    return ExperimentResult(config, runs)
