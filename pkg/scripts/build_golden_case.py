#!/usr/bin/env python3
"""Build the bundled demonstration case and print what came out.

Usage: python scripts/build_golden_case.py [data_dir]

Creates (or refuses to overwrite) a fully curated case under data_dir
(default ./evigraph_data), then prints the match summary and the curated
timeline so the output can be eyeballed or piped elsewhere.
"""

import sys
from pathlib import Path

from evigraph import analytics, casestudy
from evigraph.graph import EDGE_CONFIRMED, EDGE_PROPOSED, EDGE_REJECTED


def main() -> int:
    data_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("evigraph_data")
    case = casestudy.build_case(data_dir)
    graph = case.graph

    print(f"case {case.case_id} at version {graph.version}")
    print(f"  {len(graph.sources)} sources, {len(graph.entities)} entities, "
          f"{len(graph.attributes)} attribute nodes")
    by_status = {EDGE_PROPOSED: 0, EDGE_CONFIRMED: 0, EDGE_REJECTED: 0}
    for edge in graph.edges.values():
        by_status[edge.status] += 1
    print(f"  edges: {by_status[EDGE_CONFIRMED]} confirmed, "
          f"{by_status[EDGE_PROPOSED]} proposed, "
          f"{by_status[EDGE_REJECTED]} rejected")

    print("\ncurated timeline:")
    events = case.timeline(window=casestudy.GOLDEN_WINDOW)
    print(analytics.timeline_csv(events), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
