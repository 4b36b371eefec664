#!/usr/bin/env python3
"""
hamlearn
Certified Hamiltonian learning from Gibbs-state expectation values
"""

import os
import sys

# Make the project root importable when run as a script
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from hamlearn.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
