#!/usr/bin/env python3
"""
Command-line runner for the LADR retrieval engine
"""

import os
import sys

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app import run_cli

if __name__ == '__main__':
    sys.exit(run_cli(sys.argv[1:]))
