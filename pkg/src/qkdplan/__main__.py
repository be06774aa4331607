import sys

from qkdplan.cli import main

sys.exit(main())
