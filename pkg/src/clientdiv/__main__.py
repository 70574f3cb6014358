import sys

from clientdiv.cli import main

sys.exit(main())
