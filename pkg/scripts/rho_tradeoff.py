#!/usr/bin/env python3
"""Quadratic-penalty weight sweep on the constrained network: larger weights
buy feasibility at the price of a slower loss decrease."""
import argparse

from sslalm.cli import cmd_sweep, config_from_dict


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/rho_tradeoff")
    parser.add_argument(
        "--values", default="1e-2,1e-3,1e-4,1e-5", help="comma-separated penalty weights"
    )
    args = parser.parse_args()
    cfg = config_from_dict(
        {
            "problem": {"kind": "slack_l1_net"},
            "solver": {
                "method": {"kind": "prox_sgdm", "tau": 1.0, "alpha": 0.1},
                "rho": 0.01,
                "beta": 1.0,
                "theta": {"kind": "constant", "c": 0.5},
                "eta": {"kind": "inv_sqrt_epoch", "c": 0.1, "epoch_len": 2},
                "max_iters": 200,
                "seed": 0,
            },
            "kkt_probe": None,
        }
    )
    values = [float(v) for v in args.values.split(",")]
    cmd_sweep(cfg, "solver.rho", values, out=args.out)


if __name__ == "__main__":
    main()
