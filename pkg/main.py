#!/usr/bin/env python3
"""
Command-line interface for the weak-to-strong measurement simulator.

This script provides a convenient entry point without installing the package.
"""

import os
import sys

# Add the project root to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

from weakstrong.core.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
