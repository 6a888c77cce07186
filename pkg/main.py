"""
Command-line entry point of the electro-optic sampling toolkit.

Usage:
    python main.py simulate --kind both
    python main.py --out results/sweep sweep --distances 30,50
    python main.py --out results/synth synth
    python main.py --out results/analysis analyze --manifest results/synth/manifest.json
"""

import os
import sys

# Add repository root to path to import the src package
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.cli import main

if __name__ == '__main__':
    main()
