"""
Fakespan: temporal forgery localization from cross-modal reconstruction discrepancies
Command-line application entry point
"""
import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
