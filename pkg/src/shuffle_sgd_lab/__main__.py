"""Allow `python3 -m shuffle_sgd_lab`."""

import sys

from .cli import main

sys.exit(main())
