#!/usr/bin/env python
"""Channel MI and accuracy across block lengths and Bob policies."""
from __future__ import annotations

import argparse
import json

from nosignal.channel import POLICIES, ChannelConfig, run_experiment


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--block-lens", type=int, nargs="+", default=[16, 64, 256])
    p.add_argument("--trials", type=int, default=4000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str, default=None)
    args = p.parse_args()

    rows = []
    for n in args.block_lens:
        for policy in POLICIES:
            cfg = ChannelConfig(block_len=n, trials=args.trials, master_seed=args.seed, template_seed=args.seed, bob_policy=policy)
            rep = run_experiment(cfg)
            rows.append(
                {
                    "block_len": n,
                    "policy": policy,
                    "mutual_information": rep.mutual_information,
                    "accuracy": rep.accuracy,
                    "ks_pvalue": rep.ks_pvalue,
                    "threshold": rep.threshold,
                }
            )
            print(f"N={n:4d} {policy:16s} MI={rep.mutual_information:.2e} acc={rep.accuracy:.4f} KS p={rep.ks_pvalue:.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
