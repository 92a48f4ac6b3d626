import sys

from commsuccess.cli import main

sys.exit(main())
