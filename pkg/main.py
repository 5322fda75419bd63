import sys

from cat0.cli import run

if __name__ == "__main__":
    sys.exit(run())
