#!/usr/bin/env python3
"""Fabrication-noise study for the three correlation experiments.

Builds the splitter meshes once per measurement sequence, then propagates
an ensemble of independently perturbed copies (one fabrication draw per
seed per circuit) and reports the mean and spread of each inequality
value.  Optionally runs the compatibility suites on the same hardware
model to estimate the deviation rate and the corrected bound it implies.

Typical use:

    python3 scripts/noise_study.py --seeds 100 \
        --imbalance 0.02 --jitter 0.03 --leakage 0.002 --audit

    python3 scripts/noise_study.py --seeds 40 --sweep jitter \
        --values 0 0.02 0.05 0.1 0.2
"""

import argparse
import hashlib
import sys
from dataclasses import replace

import numpy as np

from wavecorr.contextuality import (
    CHSH,
    MERMIN,
    MERMIN_SUITE_STATES,
    PERES_MERMIN,
    PM_SUITE_STATES,
    compatibility_suite,
    corrected_bound,
    correlator,
    evaluate_inequality,
    mermin_suite_groups,
    pm_suite_groups,
)
from wavecorr.network import NoiseModel, build_sequence_tree, tree_distribution
from wavecorr.splitmix import substream
from wavecorr.wavecore import pauli_observable

EXPERIMENTS = (
    (CHSH, "chsh"),
    (MERMIN, "ghz"),
    (PERES_MERMIN, "psi1"),
)


def build_trees(defn, state_name):
    return {
        labels: build_sequence_tree([pauli_observable(l) for l in labels], prep=state_name)
        for labels in defn.sequences
    }


def ensemble_values(defn, trees, noise, master_seed, n_seeds):
    """Inequality value for each fabrication seed."""
    values = np.empty(n_seeds)
    for s in range(n_seeds):
        run_seed = substream(master_seed, s)
        cors = []
        for k, (labels, tree) in enumerate(trees.items()):
            drawn = replace(noise, seed=substream(run_seed, k))
            dist = tree_distribution(tree, noise=drawn)
            cors.append(correlator(dist, labels))
        values[s] = evaluate_inequality(defn, cors).value
    return values


def suite_rate(states, groups, noise, master_seed, members):
    """Worst-case deviation rate from a compatibility suite ensemble."""
    trees = {}

    def provider(state_name, labels):
        key = (state_name, tuple(labels))
        if key not in trees:
            obs = [pauli_observable(l) for l in labels]
            trees[key] = build_sequence_tree(obs, prep=state_name)
        tree = trees[key]
        digest = hashlib.sha256(f"{state_name}|{'*'.join(labels)}".encode()).digest()
        tree_seed = substream(master_seed, int.from_bytes(digest[:8], "big"))
        out = []
        for m in range(members):
            drawn = replace(noise, seed=substream(tree_seed, m))
            out.append(tree_distribution(tree, noise=drawn))
        return out

    report = compatibility_suite(states, groups, provider)
    return report


def run_point(noise, args, label=""):
    print(f"noise{label}: imbalance {noise.splitter_imbalance_sigma:g}, "
          f"jitter {noise.phase_jitter_sigma:g}, leakage {noise.leakage:g}, "
          f"{args.seeds} fabrication seeds")
    means = {}
    for defn, state_name in EXPERIMENTS:
        trees = build_trees(defn, state_name)
        vals = ensemble_values(defn, trees, noise, args.seed, args.seeds)
        means[defn.name] = vals.mean()
        print(f"  {defn.name:12s} on {state_name:5s}: mean {vals.mean():.4f} "
              f"std {vals.std(ddof=1):.4f}  sem {vals.std(ddof=1)/np.sqrt(len(vals)):.4f}  "
              f"range [{vals.min():.4f}, {vals.max():.4f}]")
    if not args.audit:
        return

    members = max(4, args.seeds // 10)
    pair = suite_rate(PM_SUITE_STATES, pm_suite_groups(), noise, args.seed + 1, members)
    triple = suite_rate(
        MERMIN_SUITE_STATES, mermin_suite_groups(), noise, args.seed + 2, members
    )
    print(f"  pair suite   : worst {pair.worst_case:.4f} ({pair.worst_description})")
    print(f"  triple suite : worst {triple.worst_case:.4f} ({triple.worst_description})")
    for defn, rate in ((CHSH, pair.worst_case), (MERMIN, triple.worst_case),
                       (PERES_MERMIN, pair.worst_case)):
        corr = corrected_bound(defn.nc_bound, defn.algebraic_max, rate)
        ok = "below" if corr < means[defn.name] else "NOT below"
        print(f"  corrected {defn.name:12s}: {corr:.4f} ({ok} the mean {means[defn.name]:.4f})")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=40, help="fabrication draws per point")
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("--imbalance", type=float, default=0.0, help="coupling error sigma")
    ap.add_argument("--jitter", type=float, default=0.0, help="phase error sigma, radians")
    ap.add_argument("--leakage", type=float, default=0.0, help="uniform loss fraction")
    ap.add_argument("--audit", action="store_true",
                    help="also run the compatibility suites and corrected bounds")
    ap.add_argument("--sweep", choices=("imbalance", "jitter", "leakage"),
                    help="vary one parameter over --values instead of a single point")
    ap.add_argument("--values", type=float, nargs="+", default=None)
    args = ap.parse_args(argv)

    base = NoiseModel(
        splitter_imbalance_sigma=args.imbalance,
        phase_jitter_sigma=args.jitter,
        leakage=args.leakage,
        seed=0,
    )
    if args.sweep:
        if not args.values:
            ap.error("--sweep needs --values")
        field = {
            "imbalance": "splitter_imbalance_sigma",
            "jitter": "phase_jitter_sigma",
            "leakage": "leakage",
        }[args.sweep]
        for v in args.values:
            run_point(replace(base, **{field: v}), args, label=f" [{args.sweep}={v:g}]")
    else:
        run_point(base, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
