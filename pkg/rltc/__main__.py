import sys

from rltc.cli import main

sys.exit(main())
