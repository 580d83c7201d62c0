import sys

from optwannier.cli import main

sys.exit(main())
