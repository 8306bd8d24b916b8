"""
Entry point for running advdal as a module.

This allows the package to be executed with: python -m advdal
"""
import sys

from advdal.main import main

if __name__ == '__main__':
    sys.exit(main())
