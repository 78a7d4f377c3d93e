"""The neighcnn entry-point."""
from __future__ import annotations

import sys

import neighcnn


if __name__ == "__main__":
    sys.exit(neighcnn.cli())
