"""Module entry point so `python -m wgflow` matches the console script."""
import sys

from .cli import main

sys.exit(main())
