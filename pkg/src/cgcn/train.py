# -*- coding: utf-8 -*-
"""
Three phase training: autoencoder pretraining, graph autoencoder pretraining
with latent alignment, and joint self-supervised training of the fused
model. Also runs the ablation matrix, the alpha/beta sweep and repeated runs
over several seeds.
"""
import json
import logging
import os
import time
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from repurpose.process import parallel_process

from cgcn.autodiff import Tape, Tensor
from cgcn.globals import (
    ABLATION_VARIANTS,
    ACTIVATIONS,
    CHECKPOINT_FNAME,
    CHECKPOINT_META_FNAME,
    CHECKPOINT_VERSION,
    LOGGER_NAME,
    METRIC_NAMES,
    ConfigurationError,
    DivergenceError,
    NonFiniteError,
)
from cgcn.graph import (
    GraphDataset,
    NormalizedAdjacency,
    describe,
    fingerprint,
    generate_sbm,
    load_dataset,
    normalize_adjacency,
    preprocess_features,
)
from cgcn.metrics import evaluate
from cgcn.model.clustering import (
    ClusterCenters,
    hard_labels,
    kl_triplet_loss,
    kmeans,
    soft_assign,
    target_distribution,
)
from cgcn.model.encoders import (
    AEOutput,
    GAEOutput,
    ae_forward,
    gae_forward,
    init_ae,
    init_gae,
)
from cgcn.model.fusion import (
    FusionOutput,
    FusionParams,
    effective_coefficients,
    fuse,
)
from cgcn.model.objectives import (
    LossBreakdown,
    LossParts,
    LossWeights,
    loss_ae,
    loss_contrastive,
    loss_igae,
    total_loss,
    zero_parts,
)
from cgcn.model.state import ModelState
from cgcn.optim import OPTIMIZERS, make_optimizer
from cgcn.utils import coerce_value, load_checkpoint, read_config_file, \
    save_checkpoint

logger = logging.getLogger(LOGGER_NAME)

LABEL_SOURCES = ("auto", "q", "kmeans")
PHASE_AE = "pretrain_ae"
PHASE_GAE = "pretrain_gae"
PHASE_TRAIN = "train"
FROZEN_WITHOUT_MULTI_ORDER = frozenset({"fusion.lambda2"})


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one run. Every field can be set in a config file or on the
    command line with ``--set key=value``.

    Dataset: `features`/`edges`/`labels` paths, or (when `features` is
    empty) a stochastic block model drawn from the `synth_*` settings.
    `k` = 0 infers the cluster count from the labels.
    """
    name: str = "run"
    features: Optional[str] = None
    edges: Optional[str] = None
    labels: Optional[str] = None
    k: int = 0
    synth_k: int = 3
    synth_nodes: int = 100
    synth_p_in: float = 0.2
    synth_p_out: float = 0.01
    synth_dim: int = 16
    synth_sep: float = 4.0
    synth_seed: Optional[int] = None
    standardize: bool = False
    row_normalize: bool = False

    hidden: Tuple[int, ...] = (256, 64)
    latent_dim: int = 20
    activation: str = "relu"

    optimizer: str = "adam"
    lr_ae: float = 1e-3
    lr_gae: float = 1e-3
    lr_train: float = 1e-3
    epochs_ae: int = 30
    epochs_gae: int = 30
    epochs_train: int = 200
    seed: int = 0

    gamma: float = 0.1
    lambda_kl: float = 10.0
    alpha: float = 0.5
    beta: float = 0.5
    v: float = 1.0
    p_update_interval: int = 1
    mean_normalize_losses: bool = False
    kmeans_n_init: int = 10

    enable_contrastive: bool = True
    enable_multi_order: bool = True
    label_source: str = "auto"

    log_interval: int = 10
    eval_interval: int = 1
    n_proc: int = 1
    sweep_metric: str = "acc"
    sweep_values: Tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0)
    seeds: Tuple[int, ...] = ()

    def __post_init__(self):
        checks = [
            (self.epochs_ae >= 1, "epochs_ae must be >= 1"),
            (self.epochs_gae >= 1, "epochs_gae must be >= 1"),
            (self.epochs_train >= 0, "epochs_train must be >= 0"),
            (self.latent_dim >= 1, "latent_dim must be >= 1"),
            (all(h >= 1 for h in self.hidden), "hidden sizes must be >= 1"),
            (self.activation in ACTIVATIONS,
             f"activation must be one of {ACTIVATIONS}"),
            (self.optimizer in OPTIMIZERS,
             f"optimizer must be one of {OPTIMIZERS}"),
            (min(self.lr_ae, self.lr_gae, self.lr_train) >= 0,
             "learning rates must be >= 0"),
            (self.v > 0, "v must be > 0"),
            (self.p_update_interval >= 1, "p_update_interval must be >= 1"),
            (self.kmeans_n_init >= 1, "kmeans_n_init must be >= 1"),
            (self.label_source in LABEL_SOURCES,
             f"label_source must be one of {LABEL_SOURCES}"),
            (self.log_interval >= 1, "log_interval must be >= 1"),
            (self.eval_interval >= 0, "eval_interval must be >= 0"),
            (self.n_proc >= 1, "n_proc must be >= 1"),
            (self.sweep_metric in METRIC_NAMES,
             f"sweep_metric must be one of {METRIC_NAMES}"),
            (len(self.sweep_values) > 0, "sweep_values must not be empty"),
            (self.k >= 0, "k must be >= 0"),
            (bool(self.features) == bool(self.edges),
             "features and edges must be given together"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)
        # validates the weights
        LossWeights(self.gamma, self.lambda_kl, self.alpha, self.beta)

    @classmethod
    def field_types(cls) -> Dict[str, type]:
        return typing.get_type_hints(cls)

    @classmethod
    def from_dict(cls, values: dict, base: "RunConfig" = None) -> "RunConfig":
        """
        Build a config from (raw or typed) values. Unset fields are taken
        from `base`, or the defaults.
        """
        types = cls.field_types()
        kwargs = asdict(base) if base is not None else {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigurationError(f"Unknown config key '{key}'")
            kwargs[key] = coerce_value(types[key], raw, key)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str, base: "RunConfig" = None) -> "RunConfig":
        entries = read_config_file(path)
        types = cls.field_types()
        for key, (_, lineno) in entries.items():
            if key not in types:
                raise ConfigurationError(
                    f"{path}, line {lineno}: unknown config key '{key}'")
        return cls.from_dict({k: v for k, (v, _) in entries.items()}, base)

    def with_overrides(self, **values) -> "RunConfig":
        return self.from_dict(values, base=self)

    def loss_weights(self) -> LossWeights:
        """Weights in effect; alignment terms are off without contrast."""
        if self.enable_contrastive:
            alpha, beta = self.alpha, self.beta
        else:
            alpha, beta = 0.0, 0.0
        return LossWeights(self.gamma, self.lambda_kl, alpha, beta)

    def to_dict(self) -> dict:
        return {
            f.name: list(v) if isinstance(v, tuple) else v
            for f, v in ((f, getattr(self, f.name)) for f in fields(self))
        }


@dataclass(frozen=True)
class TraceEntry:
    epoch: int
    phase: str
    losses: LossBreakdown
    acc: Optional[float] = None
    nmi: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"epoch": self.epoch, "phase": self.phase}
        d.update(self.losses.as_dict())
        if self.acc is not None:
            d["acc"] = self.acc
            d["nmi"] = self.nmi
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEntry":
        losses = LossBreakdown(
            **{f.name: d[f.name] for f in fields(LossBreakdown)})
        return cls(d["epoch"], d["phase"], losses, d.get("acc"), d.get("nmi"))


@dataclass(frozen=True)
class Checkpoint:
    """Pretrained parameters plus the settings and trace that made them."""
    state: ModelState
    config: RunConfig
    n_features: int
    trace: Tuple[TraceEntry, ...] = ()
    dataset: Optional[Dict[str, object]] = None

    def meta(self) -> dict:
        delta, l1, l2, lb = effective_coefficients(self.state.fusion)
        return {
            "version": CHECKPOINT_VERSION,
            "in_dim": self.n_features,
            "hidden": list(self.config.hidden),
            "latent_dim": self.config.latent_dim,
            "activation": self.config.activation,
            "enable_multi_order": self.config.enable_multi_order,
            "frozen": sorted(self.state.frozen),
            "seed": self.config.seed,
            "fusion": {"delta": delta, "lambda1": l1, "lambda2": l2,
                       "lambda_b": lb},
            "tensors": sorted(self.state.named_tensors()),
            "dataset": self.dataset,
            "trace": [e.to_dict() for e in self.trace],
        }

    def save(self, out_dir: str) -> Tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        bin_path = os.path.join(out_dir, CHECKPOINT_FNAME)
        meta_path = os.path.join(out_dir, CHECKPOINT_META_FNAME)
        save_checkpoint(bin_path, self.state.named_tensors())
        with open(meta_path, "w") as f:
            json.dump(self.meta(), f, indent=2, sort_keys=True)
        return bin_path, meta_path

    @classmethod
    def load(cls,
             ckpt_dir: str,
             config: RunConfig,
             n_features: int,
             dataset: GraphDataset = None) -> "Checkpoint":
        """
        Read a checkpoint and check it against the architecture in `config`
        and the dataset's feature count. If `dataset` is passed, it must be
        the dataset the checkpoint was pretrained on.
        """
        with open(os.path.join(ckpt_dir, CHECKPOINT_META_FNAME), "r") as f:
            meta = json.load(f)
        expected = {
            "in_dim": n_features,
            "hidden": list(config.hidden),
            "latent_dim": config.latent_dim,
            "activation": config.activation,
        }
        for key, value in expected.items():
            if meta.get(key) != value:
                raise ConfigurationError(
                    f"Checkpoint {key}={meta.get(key)} does not match the "
                    f"run's {key}={value}")

        pretrained_on = meta.get("dataset")
        if dataset is not None and pretrained_on is not None:
            if pretrained_on["fingerprint"] != fingerprint(dataset):
                raise ConfigurationError(
                    f"Checkpoint was pretrained on dataset "
                    f"'{pretrained_on['name']}' {pretrained_on['describe']}, "
                    f"the run uses '{dataset.name}' {describe(dataset)} with "
                    f"different content. Keep the pretraining `seed` or set "
                    f"`synth_seed` to train on the same graph.")

        skeleton = init_state(config, n_features)
        tensors = load_checkpoint(os.path.join(ckpt_dir, CHECKPOINT_FNAME))
        missing = set(skeleton.named_tensors()) - set(tensors)
        if missing:
            raise ConfigurationError(
                f"Checkpoint lacks tensors {sorted(missing)}")
        trace = tuple(TraceEntry.from_dict(e) for e in meta.get("trace", []))
        return cls(skeleton.replace_tensors(tensors), config, n_features,
                   trace, pretrained_on)


@dataclass(frozen=True)
class RunReport:
    """
    Result of one run: final scores, the per-epoch loss trace, the learned
    fusion coefficients and the settings. `wall_clock` is not part of
    :meth:`to_dict` so that reports of identical runs are identical.
    """
    name: str
    seed: int
    n_nodes: int
    k: int
    label_source: str
    labels: Tuple[int, ...]
    metrics: Optional[Dict[str, float]]
    trace: Tuple[TraceEntry, ...]
    fusion: Dict[str, float]
    weights: Dict[str, float]
    config: dict
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "n_nodes": self.n_nodes,
            "k": self.k,
            "label_source": self.label_source,
            "metrics": self.metrics,
            "fusion": self.fusion,
            "weights": self.weights,
            "config": self.config,
            "trace": [e.to_dict() for e in self.trace],
        }


@dataclass(frozen=True)
class Forward:
    ae: AEOutput
    gae: GAEOutput
    fusion: FusionOutput


class _TermGuard:
    """Turns a non-finite value into a DivergenceError naming the term."""

    def __init__(self, phase: str, epoch: int):
        self.phase = phase
        self.epoch = epoch
        self.term = "forward"

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, NonFiniteError):
            raise DivergenceError(self.phase, self.epoch, self.term) from exc
        return False


def load_config_dataset(config: RunConfig) -> GraphDataset:
    """Read the configured dataset, or draw the configured SBM."""
    if config.features:
        ds = load_dataset(config.features, config.edges, config.labels,
                          k=config.k or None)
    else:
        seed = config.seed if config.synth_seed is None else config.synth_seed
        ds = generate_sbm(config.synth_k, config.synth_nodes,
                          config.synth_p_in, config.synth_p_out,
                          config.synth_dim, config.synth_sep, seed=seed,
                          name=f"sbm-{config.synth_k}x{config.synth_nodes}")
    return preprocess_features(ds, config.standardize, config.row_normalize)


def frozen_tensors(config: RunConfig) -> frozenset:
    if config.enable_multi_order:
        return frozenset()
    return FROZEN_WITHOUT_MULTI_ORDER


def init_state(config: RunConfig, n_features: int) -> ModelState:
    """Freshly initialized parameters, seeded by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    ae = init_ae(n_features, config.hidden, config.latent_dim,
                 config.activation, rng)
    gae = init_gae(n_features, config.hidden, config.latent_dim,
                   config.activation, rng)
    return ModelState(ae, gae, FusionParams.initial(config.enable_multi_order),
                      frozen=frozen_tensors(config))


def forward(state: ModelState, x: Tensor,
            adj: NormalizedAdjacency) -> Forward:
    ae_out = ae_forward(state.ae, x)
    gae_out = gae_forward(state.gae, x, adj)
    return Forward(ae_out, gae_out,
                   fuse(state.fusion, ae_out.latent, gae_out.latent, adj))


class Trainer:
    """
    Runs the training phases on one dataset.

    Parameters
    ----------
    config: RunConfig
        Run settings.
    dataset: GraphDataset, optional (default: None)
        Dataset to train on. Read from `config` if not given.
    """

    def __init__(self, config: RunConfig, dataset: GraphDataset = None):
        self.config = config
        self.dataset = dataset or load_config_dataset(config)
        self.adj = normalize_adjacency(self.dataset)
        self.x = self.dataset.features
        self.weights = config.loss_weights()
        self.mean = config.mean_normalize_losses

    @property
    def true_labels(self) -> Optional[np.ndarray]:
        return self.dataset.labels_array()

    def _fit_phase(self, state: ModelState, phase: str, epochs: int,
                   lr: float, prefixes, losses_fn) -> Tuple[ModelState,
                                                           List[TraceEntry]]:
        optimizer = make_optimizer(self.config.optimizer, lr)
        trace = []
        logger.info(f"Phase {phase}: {epochs} epochs")
        for epoch in range(1, epochs + 1):
            params = state.trainable(prefixes)
            names = list(params)
            with _TermGuard(phase, epoch) as guard:
                with Tape() as tape:
                    parts, extra = losses_fn(state, guard, epoch)
                    guard.term = "total"
                    total, breakdown = total_loss(parts, self.weights)
                guard.term = "gradient"
                grads = tape.gradient(total, [params[n] for n in names])
                guard.term = "update"
                state = state.replace_tensors(
                    optimizer.step(params, dict(zip(names, grads))))

            entry = TraceEntry(epoch, phase, breakdown, **extra)
            trace.append(entry)
            if epoch % self.config.log_interval == 0 or epoch == epochs:
                logger.info(f"{phase} epoch {epoch}/{epochs}: "
                            f"total={breakdown.total:.6g}")
            logger.debug(f"{phase} epoch {epoch}: {breakdown}")
        return state, trace

    def pretrain(self, state: ModelState = None) -> Checkpoint:
        """
        Phase 1 minimizes the autoencoder loss alone. Phase 2 minimizes the
        graph autoencoder loss plus alpha times the alignment of the GAE
        latent to the AE latent; both encoders receive gradients.
        """
        cfg = self.config
        state = state or init_state(cfg, self.dataset.n_features)

        def ae_losses(state, guard, epoch):
            guard.term = "l_ae"
            out = ae_forward(state.ae, self.x)
            return zero_parts(
                l_ae=loss_ae(out.recon_features, self.x, self.mean)), {}

        def gae_losses(state, guard, epoch):
            ae_out = ae_forward(state.ae, self.x)
            guard.term = "l_igae"
            gae_out = gae_forward(state.gae, self.x, self.adj)
            l_f, l_s, _ = loss_igae(gae_out.recon_features,
                                    gae_out.recon_adjacency, self.x,
                                    self.adj, self.weights.gamma, self.mean)
            guard.term = "l_pre"
            l_pre, _, _ = loss_contrastive(gae_out.latent, ae_out.latent,
                                           None, self.weights.alpha, 0.0,
                                           "pretrain", self.mean)
            return zero_parts(l_f=l_f, l_s=l_s, l_pre=l_pre), {}

        state, trace_ae = self._fit_phase(state, PHASE_AE, cfg.epochs_ae,
                                          cfg.lr_ae, ("ae.", ), ae_losses)
        state, trace_gae = self._fit_phase(state, PHASE_GAE, cfg.epochs_gae,
                                           cfg.lr_gae, ("ae.", "gae."),
                                           gae_losses)
        return Checkpoint(state, cfg, self.dataset.n_features,
                          tuple(trace_ae + trace_gae), self.dataset_info())

    def dataset_info(self) -> Dict[str, object]:
        """Name, description and content hash of the training dataset."""
        cfg = self.config
        synth_seed = None
        if not cfg.features:
            synth_seed = cfg.seed if cfg.synth_seed is None else cfg.synth_seed
        return {
            "name": self.dataset.name,
            "describe": describe(self.dataset),
            "synth_seed": synth_seed,
            "fingerprint": fingerprint(self.dataset),
        }

    def _score(self, labels) -> Optional[Dict[str, float]]:
        if self.true_labels is None:
            return None
        return evaluate(self.true_labels, labels)

    def embedding_labels(self, state: ModelState) -> Tuple[int, ...]:
        """K-means labels of the fused embedding."""
        z = forward(state, self.x, self.adj).fusion.z_final
        res = kmeans(z, self.dataset.k, seed=self.config.seed,
                     n_init=self.config.kmeans_n_init)
        return tuple(int(v) for v in res.labels)

    def init_centers(self, state: ModelState) -> ModelState:
        z = forward(state, self.x, self.adj).fusion.z_final
        res = kmeans(z, self.dataset.k, seed=self.config.seed,
                     n_init=self.config.kmeans_n_init)
        centers = ClusterCenters(Tensor(res.centers, requires_grad=True),
                                 self.config.v)
        return replace(state, centers=centers)

    def train(self, checkpoint: Checkpoint) -> RunReport:
        """
        Joint training from a pretrained checkpoint. Centers are initialized
        by K-means on the fused embedding; the target distribution is
        recomputed from the fused soft assignment every `p_update_interval`
        epochs.
        """
        cfg = self.config
        if self.dataset.n_nodes < self.dataset.k:
            raise ConfigurationError(
                f"Need at least k={self.dataset.k} nodes, got "
                f"{self.dataset.n_nodes}")
        started = time.perf_counter()
        state = replace(checkpoint.state, frozen=frozen_tensors(cfg))
        if not cfg.enable_multi_order:
            logger.info("Multi-order aggregation off: lambda2 frozen at 0")
            state = replace(state,
                            fusion=replace(state.fusion,
                                           lambda2=Tensor(
                                               0.0, requires_grad=True)))
        state = self.init_centers(state)
        holder = {"p": None}
        n = self.dataset.n_nodes

        def train_losses(state, guard, epoch):
            guard.term = "l_ae"
            ae_out = ae_forward(state.ae, self.x)
            l_ae = loss_ae(ae_out.recon_features, self.x, self.mean)
            guard.term = "l_igae"
            gae_out = gae_forward(state.gae, self.x, self.adj)
            l_f, l_s, _ = loss_igae(gae_out.recon_features,
                                    gae_out.recon_adjacency, self.x,
                                    self.adj, self.weights.gamma, self.mean)
            guard.term = "fusion"
            fused = fuse(state.fusion, ae_out.latent, gae_out.latent,
                         self.adj)
            guard.term = "l_train"
            l_pre, l_train, _ = loss_contrastive(gae_out.latent,
                                                 ae_out.latent,
                                                 fused.z_final,
                                                 self.weights.alpha,
                                                 self.weights.beta, "train",
                                                 self.mean)
            guard.term = "l_kl"
            q_fused = soft_assign(fused.z_final, state.centers)
            if (epoch - 1) % cfg.p_update_interval == 0:
                holder["p"] = target_distribution(q_fused)
            l_kl = kl_triplet_loss(holder["p"], q_fused,
                                   soft_assign(ae_out.latent, state.centers),
                                   soft_assign(gae_out.latent, state.centers))
            if self.mean:
                l_kl = l_kl * (1.0 / n)

            extra = {}
            if (self.true_labels is not None and cfg.eval_interval
                    and epoch % cfg.eval_interval == 0):
                scores = self._score(hard_labels(q_fused))
                extra = {"acc": scores["acc"], "nmi": scores["nmi"]}
            parts = LossParts(l_ae, l_f, l_s, l_pre, l_train, l_kl)
            return parts, extra

        state, trace = self._fit_phase(state, PHASE_TRAIN, cfg.epochs_train,
                                       cfg.lr_train, None, train_losses)

        source = cfg.label_source
        if source == "auto":
            source = ("q" if cfg.lambda_kl > 0 and cfg.epochs_train > 0 else
                      "kmeans")
        if source == "q":
            z = forward(state, self.x, self.adj).fusion.z_final
            labels = hard_labels(soft_assign(z, state.centers))
        else:
            labels = self.embedding_labels(state)
        metrics = self._score(labels)
        if metrics is not None:
            logger.info(f"{cfg.name} seed {cfg.seed}: " + ", ".join(
                f"{k}={v:.4f}" for k, v in metrics.items()))

        delta, l1, l2, lb = effective_coefficients(state.fusion)
        return RunReport(
            name=cfg.name,
            seed=cfg.seed,
            n_nodes=n,
            k=self.dataset.k,
            label_source=source,
            labels=labels,
            metrics=metrics,
            trace=tuple(checkpoint.trace) + tuple(trace),
            fusion={"delta": delta, "lambda1": l1, "lambda2": l2,
                    "lambda_b": lb},
            weights=asdict(self.weights),
            config=cfg.to_dict(),
            wall_clock=time.perf_counter() - started,
        )


def pretrain(config: RunConfig, dataset: GraphDataset = None) -> Checkpoint:
    return Trainer(config, dataset).pretrain()


def train(config: RunConfig,
          checkpoint: Checkpoint,
          dataset: GraphDataset = None) -> RunReport:
    return Trainer(config, dataset).train(checkpoint)


def run(config: RunConfig,
        dataset: GraphDataset = None) -> Tuple[Checkpoint, RunReport]:
    """Pretraining followed by joint training."""
    started = time.perf_counter()
    trainer = Trainer(config, dataset)
    checkpoint = trainer.pretrain()
    report = trainer.train(checkpoint)
    return checkpoint, replace(report,
                               wall_clock=time.perf_counter() - started)


def kmeans_baseline(dataset: GraphDataset,
                    seed: int = 0,
                    n_init: int = 10) -> Tuple[Tuple[int, ...],
                                               Optional[Dict[str, float]]]:
    """
    K-means on the raw node features.

    Returns
    -------
    labels: tuple
        Cluster of every node.
    metrics: dict or None
        Scores against the ground truth, None without labels.
    """
    res = kmeans(dataset.features, dataset.k, seed=seed, n_init=n_init)
    labels = tuple(int(v) for v in res.labels)
    true = dataset.labels_array()
    return labels, (evaluate(true, labels) if true is not None else None)


def _cell_results(func, iter_kwargs: dict, static_kwargs: dict,
                  n_proc: int) -> list:
    """Run grid cells through the process pool, results in grid order."""
    results = parallel_process(func,
                               ITER_KWARGS=iter_kwargs,
                               STATIC_KWARGS=static_kwargs,
                               logger_name=LOGGER_NAME,
                               loglevel="WARNING",
                               n_proc=n_proc,
                               backend="multiprocessing")
    return [res for _, res in sorted(results, key=lambda r: r[0])]


def _run_cell(index: int, overrides: dict, config: RunConfig):
    _, report = run(config.with_overrides(**overrides))
    return index, report


def _train_cell(index: int, overrides: dict, config: RunConfig,
                checkpoint: Checkpoint, dataset: GraphDataset):
    return index, train(config.with_overrides(**overrides), checkpoint,
                        dataset)


def run_seeds(config: RunConfig) -> Tuple[int, ...]:
    return config.seeds or (config.seed, )


def metric_summary(reports: Sequence[RunReport]) -> Dict[str, Dict[str,
                                                                   float]]:
    """Mean and (population) standard deviation of every metric."""
    scored = [r.metrics for r in reports if r.metrics is not None]
    if not scored:
        raise ConfigurationError("No ground truth labels to score against")
    values = {m: np.array([s[m] for s in scored]) for m in METRIC_NAMES}
    return {
        "mean": {m: float(v.mean()) for m, v in values.items()},
        "std": {m: float(v.std()) for m, v in values.items()},
    }


ABLATION_FLAGS = {
    "base": {"enable_contrastive": False, "enable_multi_order": False},
    "+C": {"enable_contrastive": True, "enable_multi_order": False},
    "+S": {"enable_contrastive": False, "enable_multi_order": True},
    "+C+S": {"enable_contrastive": True, "enable_multi_order": True},
}


@dataclass(frozen=True)
class AblationResult:
    variants: Tuple[str, ...]
    reports: Dict[str, Tuple[RunReport, ...]]

    def summary(self) -> Dict[str, Dict[str, Dict[str, float]]]:
        return {v: metric_summary(self.reports[v]) for v in self.variants}


def ablate(config: RunConfig, seeds: Sequence[int] = None) -> AblationResult:
    """
    Run the base model (no alignment, first order only) and the +C, +S and
    +C+S variants with identical seeds.
    """
    seeds = tuple(seeds) if seeds else run_seeds(config)
    cells = [(variant, seed) for variant in ABLATION_VARIANTS
             for seed in seeds]
    logger.info(f"Ablation: {len(ABLATION_VARIANTS)} variants x "
                f"{len(seeds)} seeds")
    reports = _cell_results(
        _run_cell, {
            "index": list(range(len(cells))),
            "overrides": [dict(ABLATION_FLAGS[v], seed=s) for v, s in cells],
        }, {"config": config}, config.n_proc)

    grouped = {v: [] for v in ABLATION_VARIANTS}
    for (variant, _), report in zip(cells, reports):
        grouped[variant].append(report)
    return AblationResult(ABLATION_VARIANTS,
                          {v: tuple(r) for v, r in grouped.items()})


@dataclass(frozen=True)
class SweepResult:
    alphas: Tuple[float, ...]
    betas: Tuple[float, ...]
    reports: Tuple[RunReport, ...]

    def cells(self):
        """(alpha, beta, report), alpha in the outer loop."""
        it = iter(self.reports)
        for a in self.alphas:
            for b in self.betas:
                yield a, b, next(it)


def sweep(config: RunConfig,
          alphas: Sequence[float] = None,
          betas: Sequence[float] = None,
          dataset: GraphDataset = None,
          checkpoint: Checkpoint = None) -> SweepResult:
    """
    Train every (alpha, beta) pair of the grid from one shared pretraining.

    Parameters
    ----------
    config: RunConfig
        Base settings; also used for the shared pretraining.
    alphas, betas: list, optional
        Grid values, default ``config.sweep_values``.
    dataset: GraphDataset, optional
        Dataset, read from `config` if not given.
    checkpoint: Checkpoint, optional
        Pretrained parameters; pretrained here if not given.
    """
    alphas = tuple(alphas if alphas is not None else config.sweep_values)
    betas = tuple(betas if betas is not None else config.sweep_values)
    if not alphas or not betas:
        raise ConfigurationError("Sweep grids must not be empty")
    if not config.enable_contrastive:
        logger.warning("Sweeping alpha and beta with enable_contrastive off; "
                       "all cells train without alignment")

    dataset = dataset or load_config_dataset(config)
    checkpoint = checkpoint or pretrain(config, dataset)
    grid = [(a, b) for a in alphas for b in betas]
    logger.info(f"Sweep: {len(grid)} cells")
    reports = _cell_results(
        _train_cell, {
            "index": list(range(len(grid))),
            "overrides": [{"alpha": a, "beta": b} for a, b in grid],
        }, {
            "config": config,
            "checkpoint": checkpoint,
            "dataset": dataset,
        }, config.n_proc)
    return SweepResult(alphas, betas, tuple(reports))


def repeat(config: RunConfig,
           seeds: Sequence[int] = None) -> Tuple[RunReport, ...]:
    """Full runs, one per seed."""
    seeds = tuple(seeds) if seeds else run_seeds(config)
    return tuple(
        _cell_results(
            _run_cell, {
                "index": list(range(len(seeds))),
                "overrides": [{"seed": s} for s in seeds],
            }, {"config": config}, config.n_proc))
