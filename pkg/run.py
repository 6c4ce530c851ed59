"""
Application entry point
Runs one spi-kit subcommand, e.g. `python run.py run --config configs/demo_255.json`
"""
import sys

from app import main

if __name__ == '__main__':
    sys.exit(main())
