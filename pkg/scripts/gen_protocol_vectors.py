#!/usr/bin/env python3
"""Emit byte-exact oracle-protocol conformance vectors as JSON.

External adapters must reproduce the "expect" line for every "send" line,
byte for byte (each input is asked twice to pin down determinism). The
builtin kinds here mirror the demo predictors shipped with the adapter.
"""

import argparse
import itertools
import json

from satexplain.core import Instance
from satexplain.oracles import ThresholdOracle, TruthTableOracle, protocol_vectors


def oracle_for(kind):
    if kind == "and":
        return TruthTableOracle(2, (0, 0, 0, 1))
    if kind == "or":
        return TruthTableOracle(2, (0, 1, 1, 1))
    if kind == "threshold":
        return ThresholdOracle(5, frozenset({0, 1, 2}), 2)
    raise SystemExit(f"unknown oracle kind {kind!r}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("kind", choices=["and", "or", "threshold"])
    ap.add_argument("--out", default="-", help="output path, '-' for stdout")
    args = ap.parse_args()

    oracle = oracle_for(args.kind)
    inputs = [Instance(bits) for bits in itertools.product((0, 1), repeat=oracle.n_features)]
    doc = {
        "oracle": args.kind,
        "n_features": oracle.n_features,
        "steps": protocol_vectors(oracle, inputs),
    }
    text = json.dumps(doc, indent=2)
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
