import sys

from sketchrec.cli import main

sys.exit(main())
