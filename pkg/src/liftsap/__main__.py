import sys

from liftsap.cli import main

sys.exit(main())
