import sys

from focuslab.cli import main

sys.exit(main())
