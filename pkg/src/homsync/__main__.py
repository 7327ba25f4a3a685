import sys

from homsync.cli import main

sys.exit(main())
