import sys

from wordensemble.cli import main

sys.exit(main())
