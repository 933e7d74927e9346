"""Print the asymptotic law table for one parameter set as JSON.

    python3 scripts/law_table.py 3 1 1 3 4
"""

import sys

from kirchhoff_gs.asymptotics import table_json
from kirchhoff_gs.cli import dumps
from kirchhoff_gs.core import validate_params


def main():
    if len(sys.argv) != 6:
        sys.exit("usage: law_table.py N a b q p")
    N, a, b, q, p = sys.argv[1:]
    print(dumps(table_json(validate_params(int(N), float(a), float(b), float(q), float(p)))))


if __name__ == "__main__":
    main()
