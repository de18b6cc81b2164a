from __future__ import unicode_literals

import collections
import logging
import math


logger = logging.getLogger(__name__)


class EventEmitter(object):

    """Mixin that lets pipeline objects report progress to listeners.

    :class:`~rfsynth.Flow` is the main emitter. :func:`~rfsynth.train` and
    :func:`~rfsynth.local_search` take an ``emitter`` argument and report
    through it, so one set of listeners sees the whole run.
    """

    def __init__(self):
        self._listeners = collections.defaultdict(list)

    def on(self, event, listener, *user_args):
        """Register ``listener`` for ``event``.

        The listener is called with the event's own arguments followed by
        ``user_args``. A listener returning :class:`False` is unregistered
        after that call.
        """
        self._listeners[event].append(_Listener(listener, user_args))

    def off(self, event=None, listener=None):
        """Unregister ``listener`` from ``event``.

        Without ``listener`` every listener of ``event`` is dropped, and
        without ``event`` every listener of every event.
        """
        events = list(self._listeners) if event is None else [event]
        for name in events:
            self._listeners[name] = [
                entry
                for entry in self._listeners[name]
                if listener is not None and entry.callback != listener
            ]

    def emit(self, event, *event_args):
        """Call the listeners of ``event`` in registration order."""
        logger.debug('Event %s %r', event, event_args)
        for entry in list(self._listeners[event]):
            if entry.callback(*(event_args + entry.user_args)) is False:
                self.off(event, entry.callback)

    def num_listeners(self, event=None):
        """Listeners registered for ``event``, or for any event."""
        if event is None:
            return sum(len(entries) for entries in self._listeners.values())
        return len(self._listeners[event])


_Listener = collections.namedtuple('_Listener', ['callback', 'user_args'])


def to_unicode(value):
    """Converts bytes and unicode to unicode strings.

    Bytes are decoded from UTF-8.
    """
    if isinstance(value, bytes):
        return value.decode('utf-8')
    elif isinstance(value, str):
        return value
    else:
        raise ValueError('Value must be text or bytes')


def parse_float(text):
    """Parse a finite float, raising :exc:`ValueError` otherwise."""
    value = float(text)
    if not math.isfinite(value):
        raise ValueError('Value must be finite: %r' % text)
    return value


def snap(value, pitch):
    """Round ``value`` to the nearest multiple of ``pitch``.

    The result is rounded to 9 decimals so that repeated snapping does not
    accumulate binary noise.
    """
    return round(round(value / pitch) * pitch, 9)
