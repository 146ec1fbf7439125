#!/usr/bin/env python
# encoding: utf-8
"""
Print the alpha screening table of the TODO objective.

The table is formatted in restructured text for use with the Sphinx
documentation.
"""

from __future__ import print_function, absolute_import

import argparse

from tobt.alpha import AlphaSimConfig, simulate_alpha


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip())
    parser.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,"
                        "0.8,0.9,1.0,2.0,5.0,10.0",
                        help="comma separated alpha values")
    parser.add_argument("--mu-sigma", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = AlphaSimConfig(alpha_grid=[float(a) for a in
                                     args.alphas.split(",")],
                         mu_sigma=args.mu_sigma, seed=args.seed)
    colnames = ("alpha", "pref loss", "tie loss", "pref weight", "feasible")
    print(make_table(make_alpha_rows(simulate_alpha(cfg)), colnames))


def make_alpha_rows(results):
    """Transform screening results into table rows."""
    return [("{0:g}".format(r.alpha),
             "{0:.4f}".format(r.mean_pref_loss),
             "{0:.4f}".format(r.mean_tie_loss),
             "{0:.4f}".format(r.mean_pref_weight),
             "yes" if r.feasible else "no") for r in results]


def make_table(data, col_names):
    n_cols = len(data[0])
    assert n_cols == len(col_names)
    col_sizes = [max(len(cname), max(len(r[i]) for r in data))
                 for i, cname in enumerate(col_names)]
    formatter = " ".join("{:<%d}" % c for c in col_sizes)
    rows = "\n".join(formatter.format(*row) for row in data)
    header = formatter.format(*col_names)
    divider = formatter.format(*["=" * c for c in col_sizes])
    return "\n".join((divider, header, divider, rows, divider))


if __name__ == "__main__":
    main()
