"""
Allow running as python -m nehari_bif
"""

import sys

from nehari_bif.main import main

if __name__ == "__main__":
    sys.exit(main())
