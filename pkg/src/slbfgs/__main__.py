import sys

from slbfgs.cli import main

sys.exit(main())
