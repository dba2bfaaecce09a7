"""Regenerate the golden leakage reports under reports/.

Runs the packaged four-party scenario under every topology at the pinned
seed. The acceptance suite compares fresh runs against these files byte-for-byte.
"""

from pathlib import Path

from ledgerlab import scenario
from ledgerlab.topologies import TOPOLOGIES

OUT = Path(__file__).resolve().parent.parent / "reports"
SCENARIO = "leakage_4party"
SEED = 1


def golden_name(kind: str) -> str:
    return "%s-%s-seed%d.report.json" % (SCENARIO, kind, SEED)


def main():
    OUT.mkdir(exist_ok=True)
    sc = scenario.load(SCENARIO)
    for kind in sorted(TOPOLOGIES):
        (OUT / golden_name(kind)).write_text(scenario.run(sc, SEED, kind).report_json())


if __name__ == "__main__":
    main()
