#!/usr/bin/env python3
"""Run the two-candidate distinguishing game against a chosen imposter.

Example:
    python3 scripts/run_distinguish.py --circuit ghz3.qc --bob corrupted \
        --trials 100000 --seed 3
"""

import argparse

from bornbox.circuits import parse_circuit
from bornbox.cli import to_json
from bornbox.experiments import run_hypothesis_test


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--circuit", required=True, help="circuit file")
    ap.add_argument("--bob", choices=("exact", "corrupted", "scheduled"),
                    default="exact")
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=100000)
    ap.add_argument("--rounds", type=int, default=1)
    ap.add_argument("--corruption-l1", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    with open(args.circuit, "r", encoding="utf-8") as fh:
        circuit = parse_circuit(fh.read())
    res = run_hypothesis_test(circuit, args.bob, args.delta, args.trials,
                              seed=args.seed, rounds=args.rounds,
                              corruption_l1=args.corruption_l1)
    print(to_json(res.report_dict(seed=args.seed)))


if __name__ == "__main__":
    main()
