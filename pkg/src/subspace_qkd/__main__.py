"""Module execution hook: python -m subspace_qkd <command> ..."""

import sys

from .cli import main

sys.exit(main())
