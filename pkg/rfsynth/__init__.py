from __future__ import unicode_literals

import pkg_resources


__version__ = pkg_resources.get_distribution('rfsynth').version


def _setup_logging():
    """Setup logging to log to nowhere by default.

    For details, see:
    http://docs.python.org/3/howto/logging.html#library-config

    Internal function.
    """
    import logging

    logger = logging.getLogger('rfsynth')
    handler = logging.NullHandler()
    logger.addHandler(handler)


_setup_logging()

from rfsynth.error import *  # noqa
from rfsynth.config import *  # noqa
from rfsynth.geometry import *  # noqa
from rfsynth.netlist import *  # noqa
from rfsynth.neuralnet import *  # noqa
from rfsynth.inductor import *  # noqa
from rfsynth.pcell import *  # noqa
from rfsynth.placement import *  # noqa
from rfsynth.routing import *  # noqa
from rfsynth.gdsii import *  # noqa
from rfsynth.flow import *  # noqa
