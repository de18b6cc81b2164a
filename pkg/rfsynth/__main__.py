from __future__ import unicode_literals

import sys

from rfsynth.cli import main


if __name__ == '__main__':
    sys.exit(main())
