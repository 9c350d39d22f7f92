#!/usr/bin/env python3
"""Walk the whole pipeline on a 2-feature AND black box and print the report.

The instance (0,0) is predicted 0; the only minimal flip set is {0,1} and
each single feature at 0 is a sufficient reason for the negative prediction.
"""

from satexplain.oracles import OracleSpec
from satexplain.pipeline import RunConfig, run_explain


def main():
    config = RunConfig(
        oracle=OracleSpec(kind="truth-table", n_features=2, table="0001"),
        instance="00",
        radius=2,
        count=3,  # the whole Hamming ball around (0,0)
        out_report="toy-report.json",
    )
    report, code = run_explain(config)
    print(report.to_json())
    print(f"\nexit code {code}")
    print(f"counterfactuals: {report.counterfactuals}")
    print(f"sufficient reasons: {report.sufficient_reasons}")


if __name__ == "__main__":
    main()
