import json
import logging
import os

import click
import numpy as np

from cgcn.globals import (
    ABLATION_FNAME,
    LABELS_FNAME,
    LOSSES_FNAME,
    REPEAT_FNAME,
    LOGGER_NAME,
    CgcnError,
    ConfigurationError,
)
from cgcn.graph import describe, generate_sbm, read_labels, save_dataset
from cgcn.metrics import evaluate
from cgcn.report import (
    write_ablation_csv,
    write_labels,
    write_losses_csv,
    write_repeat_csv,
    write_run_outputs,
    write_sweep_outputs,
)
from cgcn.train import (
    Checkpoint,
    RunConfig,
    Trainer,
    ablate,
    kmeans_baseline,
    load_config_dataset,
    repeat,
    sweep,
)
from cgcn.utils import parse_override, read_summary_yml, update_summary_file

CONTEXT_SETTINGS = {
    'show_default': True,
    'help_option_names': ['-h', '--help']
}
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _fail(ctx, e: Exception, exit_code: int):
    """One JSON line on stderr, then exit."""
    message = e.format_message() if isinstance(e, click.ClickException) \
        else str(e)
    click.echo(json.dumps({
        "error": type(e).__name__,
        "message": message,
        "command": ctx.invoked_subcommand,
    }), err=True)
    ctx.exit(exit_code)


class CgcnGroup(click.Group):
    """
    Reports every error as one JSON line on stderr. Usage errors keep
    click's exit code (2), all others exit with 1.
    """

    def parse_args(self, ctx, args):
        if not args:
            # bare `cgcn` prints the help
            return super().parse_args(ctx, args)
        try:
            return super().parse_args(ctx, args)
        except click.ClickException as e:
            _fail(ctx, e, e.exit_code)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException as e:
            _fail(ctx, e, e.exit_code)
        except (click.exceptions.Exit, click.Abort):
            raise
        except CgcnError as e:
            _fail(ctx, e, 1)
        except Exception as e:
            logging.getLogger(LOGGER_NAME).debug("Unexpected error",
                                                 exc_info=True)
            _fail(ctx, e, 1)


def _parse_floats(value: str):
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"Expected comma separated numbers, got "
                                 f"'{value}'")


def _parse_ints(value: str):
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"Expected comma separated integers, got "
                                 f"'{value}'")


def make_config(config_file=None, seed=None, sets=(), base=None) -> RunConfig:
    """
    Settings from (in increasing priority) `base`, the config file, the
    ``--set`` overrides and ``--seed``.
    """
    cfg = base or RunConfig()
    if config_file:
        cfg = RunConfig.from_file(config_file, base=cfg)
    overrides = dict(parse_override(item) for item in sets)
    if seed is not None:
        overrides["seed"] = seed
    return cfg.with_overrides(**overrides)


def run_options(f):
    f = click.option(
        '--set',
        'sets',
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a single setting, e.g. `--set alpha=2`. Can be passed "
        "multiple times.")(f)
    f = click.option(
        '--seed',
        type=int,
        default=None,
        help="Seed of initialization and K-means. Overrides the config "
        "file.")(f)
    f = click.option(
        '--out-dir',
        '-o',
        type=click.Path(file_okay=False, writable=True),
        default="output",
        help="Directory all outputs are written to.")(f)
    f = click.option(
        '--config',
        '-c',
        'config_file',
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Flat `key = value` settings file. See the docs for all keys.")(f)
    return f


@click.command(
    "synth",
    context_settings=CONTEXT_SETTINGS,
    short_help="Draw a stochastic block model dataset and write it in the "
    "three-file text format.")
@click.argument("OUT_DIR", type=click.Path(file_okay=False, writable=True))
@click.option('--k', type=int, default=3, help="Number of blocks.")
@click.option('--nodes', type=int, default=100, help="Nodes per block.")
@click.option('--p-in', type=float, default=0.2,
              help="Edge probability inside a block.")
@click.option('--p-out', type=float, default=0.01,
              help="Edge probability between blocks.")
@click.option('--dim', type=int, default=16,
              help="Feature dimension, at least k.")
@click.option('--sep', type=float, default=4.0,
              help="Length of the block mean vectors.")
@click.option('--seed', type=int, default=0, help="Random seed.")
def cli_synth(out_dir, k, nodes, p_in, p_out, dim, sep, seed):
    """
    Write features.csv, edges.csv and labels.txt of a synthetic dataset.

    \b
    Required Parameters
    -------------------
    > OUT_DIR: string (required)
          Directory the dataset files are written to.
    """
    ds = generate_sbm(k, nodes, p_in, p_out, dim, sep, seed=seed)
    paths = save_dataset(ds, out_dir)
    update_summary_file(out_dir, {
        "command": "synth",
        "dataset": describe(ds),
        "settings": {"k": k, "nodes_per_cluster": nodes, "p_in": p_in,
                     "p_out": p_out, "dim": dim, "sep": sep, "seed": seed},
    })
    for path in paths.values():
        click.echo(path)


@click.command(
    "pretrain",
    context_settings=CONTEXT_SETTINGS,
    short_help="Pretrain the attribute and graph autoencoders and write a "
    "checkpoint.")
@run_options
def cli_pretrain(config_file, out_dir, seed, sets):
    """
    Run both pretraining phases and write checkpoint.bin, checkpoint.json,
    losses.csv and overview.yml to OUT_DIR. `cgcn train` continues from
    this directory with the same settings.
    """
    cfg = make_config(config_file, seed, sets)
    trainer = Trainer(cfg)
    checkpoint = trainer.pretrain()
    checkpoint.save(out_dir)
    write_losses_csv(os.path.join(out_dir, LOSSES_FNAME), checkpoint.trace)
    update_summary_file(out_dir, {
        "command": "pretrain",
        "config": cfg.to_dict(),
        "dataset": dict(describe(trainer.dataset), name=trainer.dataset.name),
    })
    click.echo(out_dir)


@click.command(
    "train",
    context_settings=CONTEXT_SETTINGS,
    short_help="Jointly train from a pretraining checkpoint and write the "
    "run report.")
@click.argument("CHECKPOINT_DIR", type=click.Path(exists=True,
                                                  file_okay=False))
@run_options
def cli_train(checkpoint_dir, config_file, out_dir, seed, sets):
    """
    Train from the checkpoint in CHECKPOINT_DIR. Settings are taken from the
    overview.yml of the pretraining run; the config file, --seed and --set
    override them.

    \b
    Required Parameters
    -------------------
    > CHECKPOINT_DIR: string (required)
          Output directory of `cgcn pretrain`.
    """
    props = read_summary_yml(checkpoint_dir)
    base = RunConfig.from_dict(props.get("config", {}))
    cfg = make_config(config_file, seed, sets, base=base)
    trainer = Trainer(cfg)
    checkpoint = Checkpoint.load(checkpoint_dir, cfg,
                                 trainer.dataset.n_features, trainer.dataset)
    report = trainer.train(checkpoint)
    write_run_outputs(out_dir, report, trainer.dataset,
                      {"checkpoint": os.path.abspath(checkpoint_dir)})
    click.echo(json.dumps(report.metrics, sort_keys=True))


@click.command(
    "run",
    context_settings=CONTEXT_SETTINGS,
    short_help="Pretrain and train in one go.")
@run_options
def cli_run(config_file, out_dir, seed, sets):
    """
    Pretraining followed by joint training. Writes the checkpoint and all
    run outputs to OUT_DIR.
    """
    cfg = make_config(config_file, seed, sets)
    trainer = Trainer(cfg)
    checkpoint = trainer.pretrain()
    report = trainer.train(checkpoint)
    checkpoint.save(out_dir)
    write_run_outputs(out_dir, report, trainer.dataset)
    click.echo(json.dumps(report.metrics, sort_keys=True))


@click.command(
    "eval",
    context_settings=CONTEXT_SETTINGS,
    short_help="Score a labels file against ground truth labels.")
@click.argument("TRUE_LABELS", type=click.Path(exists=True, dir_okay=False))
@click.argument("PRED_LABELS", type=click.Path(exists=True, dir_okay=False))
def cli_eval(true_labels, pred_labels):
    """
    Print ACC, NMI, ARI and macro F1 as one JSON object.

    \b
    Required Parameters
    -------------------
    > TRUE_LABELS: string (required)
          Ground truth, one integer per line.
    > PRED_LABELS: string (required)
          Predicted clusters, one integer per line (e.g. a run's labels.txt).
    """
    true = read_labels(true_labels)
    pred = read_labels(pred_labels)
    scores = evaluate(true, pred)
    scores.update(n=len(true), k=int(np.unique(true).size))
    click.echo(json.dumps(scores, sort_keys=True))


@click.command(
    "ablate",
    context_settings=CONTEXT_SETTINGS,
    short_help="Compare the base model with alignment (+C), multi-order "
    "aggregation (+S) and both (+C+S).")
@run_options
@click.option('--seeds', type=str, default=None,
              help="Comma separated seeds, e.g. `0,1,2,3,4`. Default: the "
              "`seeds` setting, or the single run seed.")
def cli_ablate(config_file, out_dir, seed, sets, seeds):
    """
    Run the four ablation variants with identical seeds and write
    ablation.csv with mean, std and delta against base for every metric.
    """
    cfg = make_config(config_file, seed, sets)
    result = ablate(cfg, _parse_ints(seeds) if seeds else None)
    os.makedirs(out_dir, exist_ok=True)
    path = write_ablation_csv(os.path.join(out_dir, ABLATION_FNAME), result)
    update_summary_file(out_dir, {"command": "ablate",
                                  "config": cfg.to_dict()})
    click.echo(path)


@click.command(
    "sweep",
    context_settings=CONTEXT_SETTINGS,
    short_help="Train on an alpha x beta grid from one shared pretraining.")
@run_options
@click.option('--alphas', type=str, default=None,
              help="Comma separated alpha values. Default: `sweep_values`.")
@click.option('--betas', type=str, default=None,
              help="Comma separated beta values. Default: `sweep_values`.")
def cli_sweep(config_file, out_dir, seed, sets, alphas, betas):
    """
    Write sweep.csv (one row per grid cell, alpha outer) and the charts
    sweep_alpha.svg and sweep_beta.svg, plus the shared checkpoint.
    """
    cfg = make_config(config_file, seed, sets)
    dataset = load_config_dataset(cfg)
    checkpoint = Trainer(cfg, dataset).pretrain()
    checkpoint.save(out_dir)
    result = sweep(cfg,
                   _parse_floats(alphas) if alphas else None,
                   _parse_floats(betas) if betas else None,
                   dataset=dataset,
                   checkpoint=checkpoint)
    paths = write_sweep_outputs(out_dir, result, cfg.sweep_metric)
    update_summary_file(out_dir, {"command": "sweep",
                                  "config": cfg.to_dict(),
                                  "alphas": list(result.alphas),
                                  "betas": list(result.betas)})
    click.echo(paths["csv"])


@click.command(
    "repeat",
    context_settings=CONTEXT_SETTINGS,
    short_help="Repeat a run over several seeds and report mean and std.")
@run_options
@click.option('--seeds', type=str, default=None,
              help="Comma separated seeds. Default: the `seeds` setting, "
              "or the single run seed.")
def cli_repeat(config_file, out_dir, seed, sets, seeds):
    """
    Write repeat.csv with one row per seed plus `mean` and `std` rows.
    """
    cfg = make_config(config_file, seed, sets)
    reports = repeat(cfg, _parse_ints(seeds) if seeds else None)
    os.makedirs(out_dir, exist_ok=True)
    path = write_repeat_csv(os.path.join(out_dir, REPEAT_FNAME), reports)
    update_summary_file(out_dir, {"command": "repeat",
                                  "config": cfg.to_dict(),
                                  "seeds": [r.seed for r in reports]})
    click.echo(path)


@click.command(
    "baseline",
    context_settings=CONTEXT_SETTINGS,
    short_help="K-means on the raw node features.")
@run_options
def cli_baseline(config_file, out_dir, seed, sets):
    """
    Cluster the configured dataset's features with K-means, write labels.txt
    and print the scores as JSON.
    """
    cfg = make_config(config_file, seed, sets)
    dataset = load_config_dataset(cfg)
    labels, metrics = kmeans_baseline(dataset, cfg.seed, cfg.kmeans_n_init)
    os.makedirs(out_dir, exist_ok=True)
    write_labels(os.path.join(out_dir, LABELS_FNAME), labels)
    click.echo(json.dumps(metrics, sort_keys=True))


@click.group(cls=CgcnGroup,
             context_settings=CONTEXT_SETTINGS,
             short_help="Contrastive graph clustering command line programs "
             "imported from the `cgcn` pip package.")
@click.option('-v', '--verbose', count=True,
              help="Log INFO messages, pass twice for DEBUG.")
def cgcn(verbose):
    level = max(logging.DEBUG, logging.WARNING - 10 * verbose)
    logging.basicConfig(format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


cgcn.add_command(cli_synth)
cgcn.add_command(cli_pretrain)
cgcn.add_command(cli_train)
cgcn.add_command(cli_run)
cgcn.add_command(cli_eval)
cgcn.add_command(cli_ablate)
cgcn.add_command(cli_sweep)
cgcn.add_command(cli_repeat)
cgcn.add_command(cli_baseline)
