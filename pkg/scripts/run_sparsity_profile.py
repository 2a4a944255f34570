#!/usr/bin/env python3
"""Tabulate the minimal sparsity t(eps) of a circuit's output distribution.

Example:
    python3 scripts/run_sparsity_profile.py --circuit ghz3.qc \
        --eps 0.0 0.05 0.1 0.2 0.5 1.0
"""

import argparse

from bornbox.circuits import parse_circuit
from bornbox.cli import to_json
from bornbox.experiments import sparsity_profile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--circuit", required=True, help="circuit file")
    ap.add_argument("--eps", type=float, nargs="+",
                    default=[0.0, 0.05, 0.1, 0.2, 0.5, 1.0])
    args = ap.parse_args()
    with open(args.circuit, "r", encoding="utf-8") as fh:
        circuit = parse_circuit(fh.read())
    table = [{"eps": eps, "t": t}
             for eps, t in sparsity_profile(circuit, args.eps)]
    print(to_json({"circuit": args.circuit, "table": table}))


if __name__ == "__main__":
    main()
