"""Two labelled points, two query clusters: how far does the query term turn the boundary?

Run:  python3 demos/toy_boundary.py [out_prefix]

Prints the fitted boundary normals for both scenarios and, when an output
prefix is given, writes the point and grid CSVs for plotting.
"""

import sys

from fstmmc.evaluation import SCENARIOS, demo2d


def main():
    prefix = sys.argv[1] if len(sys.argv) > 1 else None
    for name in SCENARIOS:
        res = demo2d(name, f"{prefix}_{name}" if prefix else None)
        print(f"{name}")
        print(f"  inductive normal     {res.inductive_normal.round(3)}   query errors {res.inductive_errors}")
        print(f"  transductive normal  {res.transductive_normal.round(3)}   query errors {res.transductive_errors}")
        print(f"  rotation             {res.rotation_degrees:.1f} degrees")
        for path in res.files:
            print(f"  wrote {path}")


if __name__ == "__main__":
    main()
