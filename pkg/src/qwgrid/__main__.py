import sys

from qwgrid.cli import main

sys.exit(main())
