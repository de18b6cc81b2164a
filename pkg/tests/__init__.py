from __future__ import unicode_literals

import os
import unittest

try:
    # Python 3.5+
    from unittest import mock
except ImportError:
    # From PyPI
    import mock

import rfsynth


DATA_DIR = os.path.join(os.path.dirname(rfsynth.__file__), 'data')

CLASS_B_PA = os.path.join(DATA_DIR, 'class_b_pa.sp')


slow = unittest.skipUnless(
    os.environ.get('RFSYNTH_SLOW_TESTS'),
    'Acceptance-scale test; set RFSYNTH_SLOW_TESTS=1 to run it',
)
"""Decorator for tests that take minutes, e.g. full-size model training."""


def small_config():
    """A :class:`rfsynth.Config` with a tiny Q model that trains in
    seconds."""
    config = rfsynth.Config()
    config.hidden_widths = (16, 8)
    config.autotrain_samples = 2000
    config.autotrain_epochs = 20
    config.batch_size = 256
    config.learning_rate = 0.005
    config.inverse_steps = 300
    config.pitch = 0.5
    return config


SMALL_TECH = """\
[routing]
pitch = 0.5

[inductor]
steps = 300

[model]
hidden_widths = 16, 8
autotrain_samples = 2000
autotrain_epochs = 20
batch_size = 256
learning_rate = 0.005
"""
"""Technology file overrides matching :func:`small_config`, for the command
line tests."""


def device(device_id, width, height, pins=None, kind='resistor'):
    """A :class:`rfsynth.DeviceFootprint` with pins given as
    ``(name, x, y)``. Defaults to two-pin A/B on the left and right edge."""
    if pins is None:
        pins = [('A', 0.0, height / 2.0), ('B', width, height / 2.0)]
    return rfsynth.DeviceFootprint(
        device_id,
        width,
        height,
        tuple(rfsynth.Pin(n, x, y, 'M1') for n, x, y in pins),
        kind,
    )


def net(name, pins, weight=1.0):
    return rfsynth.Net(name, tuple(pins), weight)
