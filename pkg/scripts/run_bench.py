"""Run the benchmark scenarios and append CSV rows under --out/<run_id>/.

    python scripts/run_bench.py --out bench-results --workers 1 8 --items 8 16 32
"""

import sys

from cwlforge.bench import main

if __name__ == "__main__":
    sys.exit(main())
