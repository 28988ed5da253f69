import sys

from risiac.cli import main

sys.exit(main())
