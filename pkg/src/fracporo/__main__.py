import sys

from fracporo.cli import main

sys.exit(main())
