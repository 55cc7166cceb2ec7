#!/usr/bin/env python3
"""Run the Class2Simi command-line interface from a source checkout."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from class2simi.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
