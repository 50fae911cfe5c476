from dataclasses import asdict
from pathlib import Path

import pandas as pd

from ..rl import get_variant
from .evaluation import evaluate
from .training import train

# Variant every ablation is paired with
BASELINE = "full"


def ablation_run(
    config,
    variant,
    presets=("stepping_stones_l2",),
    seeds=(0, 1, 2),
    trials=None,
    verbose=True,
):
    """
    Train and evaluate the full method and one ablation under one seed set

    Each (variant, seed) pair trains from scratch into
    ``<out>/<variant>/seed_<seed>`` with otherwise identical settings and
    is evaluated on every preset with the same evaluation seed.

    Parameters
    ----------
    config : RunConfig
        Shared settings; ``run.variant`` and ``run.seed`` are overridden
    variant : str
        Ablation variant name
    presets : tuple of str, optional
        Terrain presets to evaluate on, by default stepping stones level 2
    seeds : tuple of int, optional
        Training and evaluation seeds, by default (0, 1, 2)
    trials : int, optional
        Episodes per preset, by default ``config.run.eval_trials``
    verbose : bool, optional
        Print progress, by default True

    Returns
    -------
    dict
        Variant name -> list of (seed, EvalReport), in seed then preset
        order
    """
    names = [BASELINE]
    if get_variant(variant).name != BASELINE:
        names.append(variant)
    out = Path(config.run.out)
    results = {}
    for name in names:
        results[name] = []
        for seed in seeds:
            run_config = config.replace(
                run={
                    "variant": name,
                    "seed": seed,
                    "out": str(out / name / "seed_{}".format(seed)),
                }
            )
            if verbose:
                print("Ablation | training {} with seed {}".format(name, seed))
            trainer = train(run_config, verbose=verbose)
            checkpoint = trainer.checkpoint_path()
            for preset in presets:
                report = evaluate(
                    trainer.agent,
                    run_config,
                    preset,
                    trials,
                    seed,
                    checkpoint=checkpoint,
                    verbose=verbose,
                )
                if verbose:
                    print("Ablation | {} | {}".format(name, report))
                results[name].append((seed, report))
    return results


def ablation_frame(results):
    """Tidy table of ablation results, one row per (variant, seed, preset)"""
    rows = []
    for name, reports in results.items():
        for seed, report in reports:
            rows.append(dict(variant=name, seed=seed, **asdict(report)))
    return pd.DataFrame(rows)
