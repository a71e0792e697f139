#!/usr/bin/env python3
"""Constrained network training on the synthetic dataset: single-loop runs
(normalized dual) against the classical-ascent baselines with a fixed inner
budget, 100 epochs each. Writes the comparison table to --out."""
import argparse

from sslalm.cli import cmd_compare, config_from_dict


def build_config(method_kind, dual, epochs):
    method = (
        {"kind": "prox_sgdm", "tau": 1.0, "alpha": 0.2}
        if method_kind == "sgdm"
        else {"kind": "prox_adam", "tau1": 1.0, "tau2": 0.1, "alpha": 0.1, "eps": 1e-8}
    )
    solver = {
        "method": method,
        "rho": 0.01,
        "beta": 1.0,
        "theta": {"kind": "constant", "c": 0.5},
        "eta": {"kind": "inv_sqrt_epoch", "c": 0.1, "epoch_len": 2},
        "max_iters": 2 * epochs,
        "seed": 0,
    }
    if dual == "ialm":
        solver["dual"] = {
            "kind": "ialm",
            "theta_tilde": 1.0,
            "beta_tilde": 1.0,
            "sigma": 2.0,
            "inner_steps": 500,
        }
    return config_from_dict(
        {
            "problem": {"kind": "slack_l1_net"},
            "solver": solver,
            "record_every": 10,
            "kkt_probe": None,
        }
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--out", default="out/net_protocol")
    args = parser.parse_args()
    configs = [
        build_config(mk, d, args.epochs) for mk in ["sgdm", "adam"] for d in ["regu", "ialm"]
    ]
    cmd_compare(configs, out=args.out)


if __name__ == "__main__":
    main()
