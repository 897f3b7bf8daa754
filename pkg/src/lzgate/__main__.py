import sys

from lzgate.cli import main

sys.exit(main())
