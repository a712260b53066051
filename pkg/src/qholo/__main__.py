import sys

from qholo.cli import main

sys.exit(main())
