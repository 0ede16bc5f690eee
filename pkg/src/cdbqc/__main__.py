import sys

from cdbqc.cli import main

sys.exit(main())
