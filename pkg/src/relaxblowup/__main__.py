import sys

from relaxblowup.cli import main

sys.exit(main())
