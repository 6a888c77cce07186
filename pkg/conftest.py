"""
Root conftest: puts the repository root on sys.path so tests import `src.*`.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
