# -*- coding: utf-8 -*-
'''
Testing the training phases and the grid runners
'''

import os
import tempfile

import numpy as np
import pytest

from cgcn.autodiff import Tensor
from cgcn.globals import (
    ABLATION_VARIANTS,
    ConfigurationError,
    DivergenceError,
)
from cgcn.graph import GraphDataset, generate_sbm
from cgcn.metrics import evaluate
from cgcn.model.fusion import effective_coefficients
from cgcn.train import (
    PHASE_AE,
    PHASE_GAE,
    PHASE_TRAIN,
    Checkpoint,
    RunConfig,
    Trainer,
    ablate,
    kmeans_baseline,
    load_config_dataset,
    metric_summary,
    pretrain,
    repeat,
    run,
    sweep,
    train,
)


def _read(path):
    with open(path, "rb") as f:
        return f.read()


def test_config_defaults_and_validation():
    cfg = RunConfig()
    assert cfg.hidden == (256, 64)
    assert cfg.latent_dim == 20
    assert (cfg.epochs_ae, cfg.epochs_gae, cfg.epochs_train) == (30, 30, 200)
    assert (cfg.gamma, cfg.lambda_kl, cfg.alpha, cfg.beta) == (0.1, 10.0,
                                                               0.5, 0.5)
    for bad in (dict(epochs_ae=0), dict(epochs_train=-1), dict(alpha=-1.0),
                dict(activation="gelu"), dict(label_source="magic"),
                dict(v=0.0), dict(features="x.csv")):
        with pytest.raises(ConfigurationError):
            RunConfig(**bad)


def test_config_from_file_and_overrides():
    with tempfile.TemporaryDirectory() as tempdir:
        path = os.path.join(tempdir, "run.cfg")
        with open(path, "w") as f:
            f.write("hidden = 32,8\nenable_contrastive = false\nseed = 4\n")
        cfg = RunConfig.from_file(path)
        with open(path, "a") as f:
            f.write("learning_rate = 0.1\n")
        with pytest.raises(ConfigurationError) as e:
            RunConfig.from_file(path)
    assert "line 4" in str(e.value)
    assert cfg.hidden == (32, 8)
    assert cfg.seed == 4
    assert cfg.loss_weights().alpha == 0.0
    assert cfg.loss_weights().beta == 0.0

    cfg = cfg.with_overrides(alpha="1.5", enable_contrastive="true")
    assert cfg.loss_weights().alpha == 1.5
    assert cfg.to_dict()["hidden"] == [32, 8]
    with pytest.raises(ConfigurationError):
        cfg.with_overrides(not_a_key=1)


def test_synthetic_dataset_seed(fast_config):
    a = load_config_dataset(fast_config)
    b = load_config_dataset(fast_config.with_overrides(synth_seed=0))
    c = load_config_dataset(fast_config.with_overrides(seed=1))
    assert a.edges == b.edges
    assert a.edges != c.edges
    assert a.n_nodes == 60


def test_pretrain_is_deterministic(fast_config):
    with tempfile.TemporaryDirectory() as tempdir:
        paths = [pretrain(fast_config).save(os.path.join(tempdir, str(i)))
                 for i in range(2)]
        assert _read(paths[0][0]) == _read(paths[1][0])
        assert _read(paths[0][1]) == _read(paths[1][1])


def test_pretrain_trace(fast_config):
    ckpt = pretrain(fast_config)
    phases = [e.phase for e in ckpt.trace]
    assert phases == [PHASE_AE] * 3 + [PHASE_GAE] * 3
    for e in ckpt.trace:
        if e.phase == PHASE_AE:
            assert e.losses.l_f == e.losses.l_pre == 0.0
            assert e.losses.total == pytest.approx(e.losses.l_ae)
        else:
            assert e.losses.l_ae == 0.0
            assert e.losses.total == pytest.approx(e.losses.l_igae +
                                                   0.5 * e.losses.l_pre)
    first, last = ckpt.trace[0].losses.total, ckpt.trace[2].losses.total
    assert last < first


def test_pretrain_without_alignment_weight(fast_config):
    ckpt = pretrain(fast_config.with_overrides(alpha=0.0))
    for e in ckpt.trace:
        if e.phase == PHASE_GAE:
            assert e.losses.l_pre > 0
            assert e.losses.l_c == 0.0
            assert e.losses.total == pytest.approx(e.losses.l_f +
                                                   0.1 * e.losses.l_s)


def test_run_report(fast_config):
    ckpt, report = run(fast_config)
    assert len(report.trace) == 3 + 3 + 4
    assert [e.phase for e in report.trace[-4:]] == [PHASE_TRAIN] * 4
    assert report.label_source == "q"
    assert len(report.labels) == 60
    assert set(report.metrics) == {"acc", "nmi", "ari", "f1"}
    assert report.wall_clock > 0
    for e in report.trace[-4:]:
        bd = e.losses
        assert bd.l_igae == pytest.approx(bd.l_f + 0.1 * bd.l_s)
        assert bd.l_c == pytest.approx(0.5 * bd.l_pre + 0.5 * bd.l_train)
        assert bd.total == pytest.approx(bd.l_ae + bd.l_igae + bd.l_c +
                                         10.0 * bd.l_kl)
        assert bd.l_kl >= 0
        assert e.acc is not None
    assert report.to_dict()["trace"][-1]["phase"] == PHASE_TRAIN
    assert "labels" not in report.to_dict()


def test_run_is_deterministic(fast_config):
    _, a = run(fast_config)
    _, b = run(fast_config)
    assert a == b
    assert a.to_dict() == b.to_dict()


def test_no_training_epochs_equals_pretrain_evaluation(fast_config):
    cfg = fast_config.with_overrides(epochs_train=0)
    dataset = load_config_dataset(cfg)
    trainer = Trainer(cfg, dataset)
    ckpt = trainer.pretrain()
    report = trainer.train(ckpt)
    assert report.label_source == "kmeans"
    assert report.labels == trainer.embedding_labels(ckpt.state)
    assert report.metrics == evaluate(dataset.labels_array(), report.labels)
    assert report.trace == ckpt.trace


def test_zero_learning_rate_keeps_parameters(fast_config):
    cfg = fast_config.with_overrides(lr_train=0.0)
    dataset = load_config_dataset(cfg)
    ckpt = pretrain(cfg, dataset)
    report = train(cfg, ckpt, dataset)
    delta, l1, l2, lb = effective_coefficients(ckpt.state.fusion)
    assert report.fusion == {"delta": delta, "lambda1": l1, "lambda2": l2,
                             "lambda_b": lb}
    totals = [e.losses.total for e in report.trace if e.phase == PHASE_TRAIN]
    assert totals == pytest.approx([totals[0]] * len(totals))


def test_all_off_uses_embedding_kmeans(fast_config):
    cfg = fast_config.with_overrides(lambda_kl=0.0, enable_contrastive=False)
    _, report = run(cfg)
    assert report.label_source == "kmeans"
    for e in report.trace:
        assert e.losses.l_c == 0.0


def test_multi_order_off_freezes_second_order(fast_config):
    _, report = run(fast_config.with_overrides(enable_multi_order=False))
    assert report.fusion["lambda2"] == 0.0


def test_mean_normalized_losses(fast_config):
    _, report = run(
        fast_config.with_overrides(mean_normalize_losses=True,
                                   p_update_interval=2))
    assert all(np.isfinite(e.losses.total) for e in report.trace)


def test_checkpoint_round_trip(fast_config):
    dataset = load_config_dataset(fast_config)
    ckpt = pretrain(fast_config, dataset)
    with tempfile.TemporaryDirectory() as tempdir:
        ckpt.save(tempdir)
        back = Checkpoint.load(tempdir, fast_config, dataset.n_features,
                               dataset)
        with pytest.raises(ConfigurationError):
            Checkpoint.load(tempdir, fast_config.with_overrides(latent_dim=5),
                            dataset.n_features)
        other = load_config_dataset(fast_config.with_overrides(seed=1))
        with pytest.raises(ConfigurationError) as e:
            Checkpoint.load(tempdir, fast_config, other.n_features, other)
    assert "synth_seed" in str(e.value)
    assert back.trace == ckpt.trace
    assert len(back.trace) == 3 + 3
    assert back.dataset == ckpt.dataset
    assert back.dataset["synth_seed"] == 0
    a, b = ckpt.state.named_tensors(), back.state.named_tensors()
    assert sorted(a) == sorted(b)
    for name in a:
        assert np.array_equal(a[name].data, b[name].data)
    assert train(fast_config, back, dataset).labels == \
        train(fast_config, ckpt, dataset).labels


def test_fewer_nodes_than_clusters(fast_config):
    ds = GraphDataset(Tensor(np.eye(2, 6)), ((0, 1), ), 3)
    trainer = Trainer(fast_config, ds)
    ckpt = trainer.pretrain()
    with pytest.raises(ConfigurationError):
        trainer.train(ckpt)


def test_divergence_names_phase_and_term(fast_config):
    cfg = fast_config.with_overrides(lr_ae=1e300)
    with pytest.raises(DivergenceError) as e:
        pretrain(cfg)
    assert e.value.phase == PHASE_AE
    assert e.value.epoch == 2
    assert "not finite" in str(e.value)


def test_kmeans_baseline():
    ds = generate_sbm(3, 100, 0.2, 0.01, 16, 4.0, seed=0)
    labels, metrics = kmeans_baseline(ds, seed=0)
    assert len(labels) == 300
    assert metrics["nmi"] >= 0.9
    no_truth = GraphDataset(ds.features, ds.edges, 3)
    assert kmeans_baseline(no_truth)[1] is None


def test_ablation(fast_config):
    cfg = fast_config.with_overrides(epochs_train=2)
    result = ablate(cfg, seeds=[0])
    assert result.variants == ABLATION_VARIANTS
    base = result.reports["base"][0]
    assert base.config["enable_contrastive"] is False
    assert base.config["enable_multi_order"] is False
    assert base.weights["alpha"] == base.weights["beta"] == 0.0
    assert base.fusion["lambda2"] == 0.0
    full = result.reports["+C+S"][0]
    assert full.config["enable_contrastive"] is True
    assert full.config["enable_multi_order"] is True
    summary = result.summary()
    assert set(summary) == set(ABLATION_VARIANTS)
    assert summary["+C"]["std"]["acc"] == 0.0


def test_sweep_degenerate_grid(fast_config):
    cfg = fast_config.with_overrides(epochs_train=2)
    dataset = load_config_dataset(cfg)
    ckpt = pretrain(cfg, dataset)
    result = sweep(cfg, [0.0], [0.0], dataset=dataset, checkpoint=ckpt)
    assert len(result.reports) == 1
    expected = train(cfg.with_overrides(alpha=0.0, beta=0.0), ckpt, dataset)
    assert result.reports[0].metrics == expected.metrics
    assert result.reports[0].labels == expected.labels


def test_sweep_default_grid(fast_config):
    cfg = fast_config.with_overrides(epochs_train=1)
    result = sweep(cfg)
    cells = list(result.cells())
    assert len(cells) == 25
    assert cells[1][:2] == (0.0, 0.5)
    assert cells[5][:2] == (0.5, 0.0)
    for a, b, report in cells:
        assert report.config["alpha"] == a
        assert report.config["beta"] == b


def test_repeat_and_summary(fast_config):
    reports = repeat(fast_config.with_overrides(epochs_train=2), seeds=[0, 1])
    assert [r.seed for r in reports] == [0, 1]
    summary = metric_summary(reports)
    for m in ("acc", "nmi", "ari", "f1"):
        values = [r.metrics[m] for r in reports]
        assert summary["mean"][m] == pytest.approx(np.mean(values))
        assert summary["std"][m] == pytest.approx(np.std(values))


BLOCK_MODEL = RunConfig(synth_k=3, synth_nodes=100, synth_p_in=0.2,
                        synth_p_out=0.01, synth_sep=4.0)


@pytest.mark.slow
def test_recovers_block_model():
    metrics = [run(BLOCK_MODEL.with_overrides(seed=s))[1].metrics
               for s in range(5)]
    assert np.mean([m["nmi"] for m in metrics]) >= 0.9
    assert np.mean([m["acc"] for m in metrics]) >= 0.95


@pytest.mark.slow
def test_full_model_is_not_worse_than_base():
    summary = ablate(BLOCK_MODEL, seeds=range(5)).summary()
    assert summary["+C+S"]["mean"]["nmi"] >= summary["base"]["mean"]["nmi"]
