# Desk-scale comparison of DPO and TODO on synthetic preference corpora with
# growing tie ratios. Prints the ternary accuracy table on the non-tie test
# pairs, the accuracy of the untrained policy, and the fitted reward-margin
# slopes of TODO at tie ratios 0 and 0.3, then plots the accuracies.
#
# 200 prompts x 8 candidates give 5600 labelled pairs, enough to draw 2000
# training pairs at every tie ratio.

import matplotlib.pyplot as pl

from tobt import TieParam, TrainConfig, PolicyTable
from tobt.data import generate_synthetic, resample_tie_ratio, split
from tobt.evaluate import compare, ternary_accuracy
from tobt.trainer import train, margin_trace_summary

RATIOS = [0.0, 0.1, 0.2, 0.3]
SEEDS = range(5)
N_TRAIN = 2000


def margin_slopes(world, cfg, seed=0):
    corpus = world.corpus()
    pool, _ = split(corpus, 0.2, seed, by="pair")
    ref = PolicyTable.uniform(world.registry)
    slopes = {}
    for ratio in (0.0, 0.3):
        train_corpus = resample_tie_ratio(pool, ratio, seed, N_TRAIN)
        _, trace = train(train_corpus, ref, ref, cfg.copy(seed=seed))
        slopes[ratio] = margin_trace_summary(trace)[0]
    return slopes


if __name__ == "__main__":
    world, corpus = generate_synthetic(200, 8, 1.0, TieParam(0.5),
                                       quantization_step=0.5, seed=0)
    print("corpus: {0} pairs, tie ratio {1:.3f}".format(len(corpus),
                                                       corpus.tie_ratio))
    cfg = TrainConfig(alpha=0.5, beta=0.01, epochs=3)

    ref = PolicyTable.uniform(world.registry)
    _, test = split(corpus, 0.2, 0, by="pair")
    base = ternary_accuracy(ref, ref, test, cfg["beta"], cfg.tie_param)
    print("untrained accuracy {0:.4f} on {1} pairs".format(base.accuracy,
                                                         base.n_pairs))

    table = compare(world, RATIOS, ["dpo", "todo"], SEEDS, cfg,
                    n_train=N_TRAIN)
    with open("comparison.csv", "w") as f:
        f.write(table.dumps())
    summary = table.summary()
    for cell in summary:
        print("{tie_ratio:.1f} {method:<5s} {accuracy_mean:.4f} "
              "+/- {accuracy_std:.4f}".format(**cell))

    slopes = margin_slopes(world, cfg)
    print("TODO margin slope: ratio 0.0 {0:.3e}, ratio 0.3 {1:.3e}".format(
        slopes[0.0], slopes[0.3]))

    fig, ax = pl.subplots()
    for method, color in (("dpo", "C0"), ("todo", "C1")):
        cells = [c for c in summary if c["method"] == method]
        ax.errorbar([c["tie_ratio"] for c in cells],
                    [c["accuracy_mean"] for c in cells],
                    yerr=[c["accuracy_std"] for c in cells], color=color,
                    marker="o", capsize=3, label=method.upper())
    ax.axhline(base.accuracy, color="gray", ls="--", label="untrained")
    ax.set_xlabel("tie ratio of training data")
    ax.set_ylabel("ternary accuracy (non-tie test pairs)")
    ax.legend()
    fig.savefig("tie_ratio_experiment.pdf")
