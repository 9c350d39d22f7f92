"""CLI entry: serve a wrapped predictor over the stdio oracle protocol."""

import argparse
import sys

from .adapter import AdapterConfig, serve


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="oracle-adapter",
        description="Serve a predict callable or pickled model as a "
        "JSON-lines oracle child process",
    )
    source = ap.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "--callable", dest="callable_path",
        help="importable predictor, e.g. oracle_adapter.demo:and_gate",
    )
    source.add_argument("--model-file", help="pickle of a callable or .predict object")
    ap.add_argument("--n-features", type=int, required=True)
    ap.add_argument(
        "--binarize-threshold", type=float, default=None,
        help="map raw model scores to 1 iff score >= threshold",
    )
    args = ap.parse_args(argv)
    config = AdapterConfig(
        n_features=args.n_features,
        callable_path=args.callable_path,
        model_file=args.model_file,
        binarize_threshold=args.binarize_threshold,
    )
    return serve(config)


if __name__ == "__main__":
    sys.exit(main())
