# This script plots the mean initial preference and tie losses of the TODO
# objective against the tie buffer alpha, on a fine and a coarse range, and
# shades the values that pass the default screen.

import numpy as np
import matplotlib.pyplot as pl

from tobt.alpha import AlphaSimConfig, simulate_alpha


def screen(lo, hi, n=91, seed=0):
    cfg = AlphaSimConfig(alpha_grid=list(np.linspace(lo, hi, n)), seed=seed)
    res = simulate_alpha(cfg)
    alpha = np.array([r.alpha for r in res])
    pref = np.array([r.mean_pref_loss for r in res])
    tie = np.array([r.mean_tie_loss for r in res])
    ok = np.array([r.feasible for r in res])
    return alpha, pref, tie, ok, cfg


def panel(ax, alpha, pref, tie, ok, cfg):
    ax.plot(alpha, pref, "C0", lw=2, label="preference loss")
    ax.plot(alpha, tie, "C1", lw=2, label="tie loss")
    ax.axhline(cfg["pref_threshold"], color="C0", ls="--", lw=1)
    ax.axhline(cfg["tie_threshold"], color="C1", ls="--", lw=1)
    if ok.any():
        ax.axvspan(alpha[ok].min(), alpha[ok].max(), color="gray",
                   alpha=0.2, label="feasible")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("mean initial loss")
    ax.legend(loc="upper center")


if __name__ == "__main__":
    fig, axes = pl.subplots(1, 2, figsize=(10, 4))
    panel(axes[0], *screen(0.1, 1.0))
    panel(axes[1], *screen(1.0, 10.0))
    fig.tight_layout()
    fig.savefig("alpha_curves.pdf")
