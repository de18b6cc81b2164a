from __future__ import unicode_literals

import collections
import logging

import rfsynth
from rfsynth import utils


__all__ = [
    'ComponentInstance',
    'ComponentKind',
    'Net',
    'Netlist',
    'Violation',
    'ViolationType',
    'load_netlist',
    'parse_netlist',
    'serialize',
    'validate',
]

logger = logging.getLogger(__name__)


class ComponentKind(object):
    RESISTOR = 'resistor'
    CAPACITOR = 'capacitor'
    INDUCTOR = 'inductor'
    NMOS = 'nmos'


PREFIXES = collections.OrderedDict(
    [
        ('R', ComponentKind.RESISTOR),
        ('C', ComponentKind.CAPACITOR),
        ('L', ComponentKind.INDUCTOR),
        ('M', ComponentKind.NMOS),
    ]
)

TERMINALS = {
    ComponentKind.RESISTOR: ('A', 'B'),
    ComponentKind.CAPACITOR: ('A', 'B'),
    ComponentKind.INDUCTOR: ('A', 'B'),
    ComponentKind.NMOS: ('G', 'D', 'S'),
}
"""Pin names of each component kind, in terminal order."""

FREQ_RANGE = (1.0, 100.0)


class ViolationType(object):
    UNDECLARED_NET = 'UndeclaredNet'
    MISSING_FREQUENCY = 'MissingFrequency'
    MISSING_WIDTH = 'MissingWidth'
    FREQUENCY_RANGE = 'FrequencyRange'
    NON_POSITIVE_VALUE = 'NonPositiveValue'
    FLOATING_TERMINAL = 'FloatingTerminal'
    EMPTY_NET = 'EmptyNet'
    DEVICE_CLEARANCE = 'DeviceClearance'
    NET_CLEARANCE = 'NetClearance'
    UNROUTED_NET = 'UnroutedNet'


class Violation(
    collections.namedtuple(
        'Violation', ['severity', 'line', 'code', 'message']
    )
):

    """A rule violation found by a checker.

    ``severity`` is ``error`` or ``warning``. ``line`` is the netlist line
    the violation refers to, or 0 for layout violations.
    """

    __slots__ = ()

    def __str__(self):
        return '%s:%d:%s' % (self.severity, self.line, self.message)


ComponentInstance = collections.namedtuple(
    'ComponentInstance',
    ['id', 'kind', 'value', 'terminals', 'freq_hint', 'width_hint'],
)
"""A netlist component.

``value`` is in Ω, pF or pH for resistors, capacitors and inductors, and
:class:`None` for transistors. ``terminals`` is the tuple of net names in
terminal order. ``freq_hint`` (GHz) and ``width_hint`` (µm) are only set on
inductors.
"""


Net = collections.namedtuple('Net', ['name', 'pins', 'weight'])
"""A net: its ``(component id, terminal index)`` pins and criticality
weight."""


class Netlist(object):

    """A parsed circuit.

    Netlists compare equal when they describe the same circuit graph. Line
    numbers and net order do not take part in the comparison.
    """

    def __init__(
        self,
        title='',
        components=(),
        nets=(),
        global_freq=None,
        declared=(),
        lines=None,
    ):
        self.title = title
        self.components = tuple(components)
        self.nets = tuple(nets)
        self.global_freq = global_freq
        self.declared = frozenset(declared)
        self.lines = dict(lines or {})
        self._by_id = {c.id: c for c in self.components}
        self._by_name = {n.name: n for n in self.nets}

    def __repr__(self):
        return 'Netlist(%r, %d components, %d nets)' % (
            self.title,
            len(self.components),
            len(self.nets),
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self._graph() == other._graph()
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def _graph(self):
        return (
            self.title,
            self.global_freq,
            self.components,
            {n.name: (sorted(n.pins), n.weight) for n in self.nets},
            self.declared,
        )

    def component(self, component_id):
        return self._by_id[component_id]

    def net(self, name):
        return self._by_name[name]

    def line_of(self, key):
        """Source line of a component id, ``.NET`` name or ``.FREQ``."""
        return self.lines.get(key, 0)


def load_netlist(filename):
    """Parse the netlist file ``filename``."""
    with open(filename, 'rb') as fh:
        return parse_netlist(utils.to_unicode(fh.read()))


def parse_netlist(text):
    """Parse netlist text into a :class:`Netlist`.

    One element per line. Lines starting with ``R``, ``C``, ``L`` or ``M``
    declare components::

        R1 n1 n2 500
        C1 n2 0 0.25
        L1 in mid 250 F=28 W=5
        M1 gate drain source

    ``.NET <name> [W=<weight>]`` declares a net and sets its criticality,
    ``.FREQ <GHz>`` the operating frequency and ``.TITLE <text>`` the title.
    ``.END`` stops parsing. Lines starting with ``*`` are comments.

    Raises :exc:`NetlistSyntaxError`, :exc:`DuplicateId` or
    :exc:`ArityError`.
    """
    state = _ParseState()
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('*'):
            continue
        if line.startswith('.'):
            if _parse_directive(state, number, line):
                break
        elif line[0].upper() in PREFIXES:
            _parse_component(state, number, line)
        else:
            raise rfsynth.NetlistSyntaxError(
                number, 'unknown element %r' % line.split()[0]
            )
    return state.build()


class _ParseState(object):
    def __init__(self):
        self.title = ''
        self.global_freq = None
        self.components = []
        self.ids = set()
        self.pins = collections.OrderedDict()
        self.weights = {}
        self.declared = []
        self.lines = {}

    def touch(self, name):
        if name not in self.pins:
            self.pins[name] = []

    def build(self):
        nets = [
            Net(name, tuple(pins), self.weights.get(name, 1.0))
            for name, pins in self.pins.items()
        ]
        return Netlist(
            self.title,
            self.components,
            nets,
            self.global_freq,
            self.declared,
            self.lines,
        )


def _parse_directive(state, number, line):
    parts = line.split(None, 1)
    keyword = parts[0].upper()
    rest = parts[1] if len(parts) > 1 else ''
    args = rest.split()
    if keyword == '.END':
        if args:
            raise rfsynth.NetlistSyntaxError(number, '.END takes no arguments')
        return True
    elif keyword == '.TITLE':
        state.title = rest.strip()
    elif keyword == '.FREQ':
        if len(args) != 1:
            raise rfsynth.NetlistSyntaxError(number, '.FREQ takes one value')
        state.global_freq = _number(number, args[0], '.FREQ value')
        state.lines['.FREQ'] = number
    elif keyword == '.NET':
        if not args:
            raise rfsynth.NetlistSyntaxError(number, '.NET needs a net name')
        name, options = args[0], _options(number, args[1:], ('W',))
        if '=' in name:
            raise rfsynth.NetlistSyntaxError(number, 'bad net name %r' % name)
        if 'W' in options:
            if options['W'] < 1:
                raise rfsynth.NetlistSyntaxError(
                    number, 'net weight must be >= 1'
                )
            state.weights[name] = options['W']
        state.touch(name)
        if name not in state.declared:
            state.declared.append(name)
        state.lines['.NET ' + name] = number
    else:
        raise rfsynth.NetlistSyntaxError(
            number, 'unknown directive %s' % keyword
        )
    return False


def _parse_component(state, number, line):
    tokens = line.split()
    component_id = tokens[0]
    kind = PREFIXES[component_id[0].upper()]
    positional = [t for t in tokens[1:] if '=' not in t]
    keyed = [t for t in tokens[1:] if '=' in t]
    if keyed and tokens.index(keyed[0]) < len(positional) + 1:
        raise rfsynth.NetlistSyntaxError(
            number, 'options must follow the positional fields'
        )

    value = None
    if kind != ComponentKind.NMOS:
        if not positional:
            raise rfsynth.NetlistSyntaxError(number, 'missing value')
        value = _number(number, positional.pop(), 'value')
    allowed = ('F', 'W') if kind == ComponentKind.INDUCTOR else ()
    options = _options(number, keyed, allowed)

    expected = len(TERMINALS[kind])
    if len(positional) != expected:
        raise rfsynth.ArityError(
            number, component_id, expected, len(positional)
        )
    if component_id in state.ids:
        raise rfsynth.DuplicateId(number, component_id)
    state.ids.add(component_id)

    for index, name in enumerate(positional):
        state.touch(name)
        state.pins[name].append((component_id, index))
    state.components.append(
        ComponentInstance(
            component_id,
            kind,
            value,
            tuple(positional),
            options.get('F'),
            options.get('W'),
        )
    )
    state.lines[component_id] = number


def _number(number, token, what):
    try:
        return utils.parse_float(token)
    except ValueError:
        raise rfsynth.NetlistSyntaxError(
            number, 'malformed %s %r' % (what, token)
        )


def _options(number, tokens, allowed):
    options = {}
    for token in tokens:
        key, _, value = token.partition('=')
        key = key.upper()
        if key not in allowed:
            raise rfsynth.NetlistSyntaxError(
                number, 'unexpected option %r' % token
            )
        if key in options:
            raise rfsynth.NetlistSyntaxError(
                number, 'option %s given twice' % key
            )
        options[key] = _number(number, value, key)
    return options


def serialize(netlist):
    """Render ``netlist`` as canonical netlist text.

    Directives come first, then the components in their original order.
    """
    out = []
    if netlist.title:
        out.append('.TITLE %s' % netlist.title)
    if netlist.global_freq is not None:
        out.append('.FREQ %r' % netlist.global_freq)
    for net in netlist.nets:
        if net.name in netlist.declared or net.weight != 1.0:
            if net.weight != 1.0:
                out.append('.NET %s W=%r' % (net.name, net.weight))
            else:
                out.append('.NET %s' % net.name)
    for c in netlist.components:
        fields = [c.id] + list(c.terminals)
        if c.value is not None:
            fields.append('%r' % c.value)
        if c.freq_hint is not None:
            fields.append('F=%r' % c.freq_hint)
        if c.width_hint is not None:
            fields.append('W=%r' % c.width_hint)
        out.append(' '.join(fields))
    out.append('.END')
    return '\n'.join(out) + '\n'


def validate(netlist, strict=False, default_width=None):
    """Check ``netlist`` and return the list of :class:`Violation`.

    Inductors need an operating frequency, from their ``F=`` hint or the
    ``.FREQ`` directive, and a trace width, from their ``W=`` hint or
    ``default_width``. In ``strict`` mode every net a component uses must be
    declared with ``.NET``. Nets with a single pin are reported as floating
    terminals, declared nets without pins as empty.

    The returned list is empty if and only if the netlist is clean.
    """
    violations = []

    def report(severity, line, code, message):
        violations.append(Violation(severity, line, code, message))

    lo, hi = FREQ_RANGE
    if netlist.global_freq is not None:
        if not lo <= netlist.global_freq <= hi:
            report(
                'error',
                netlist.line_of('.FREQ'),
                ViolationType.FREQUENCY_RANGE,
                '.FREQ %g GHz outside [%g, %g]'
                % (netlist.global_freq, lo, hi),
            )

    for c in netlist.components:
        line = netlist.line_of(c.id)
        if c.value is not None and c.value <= 0:
            report(
                'error',
                line,
                ViolationType.NON_POSITIVE_VALUE,
                '%s has non-positive value %g' % (c.id, c.value),
            )
        if c.kind == ComponentKind.INDUCTOR:
            freq = c.freq_hint
            if freq is None:
                freq = netlist.global_freq
            if freq is None:
                report(
                    'error',
                    line,
                    ViolationType.MISSING_FREQUENCY,
                    '%s has no F= hint and there is no .FREQ' % c.id,
                )
            elif c.freq_hint is not None and not lo <= freq <= hi:
                report(
                    'error',
                    line,
                    ViolationType.FREQUENCY_RANGE,
                    '%s frequency %g GHz outside [%g, %g]'
                    % (c.id, freq, lo, hi),
                )
            if c.width_hint is None and default_width is None:
                report(
                    'error',
                    line,
                    ViolationType.MISSING_WIDTH,
                    '%s has no W= hint and no default width' % c.id,
                )
            elif c.width_hint is not None and c.width_hint <= 0:
                report(
                    'error',
                    line,
                    ViolationType.NON_POSITIVE_VALUE,
                    '%s has non-positive width %g' % (c.id, c.width_hint),
                )
        if strict:
            for name in c.terminals:
                if name not in netlist.declared:
                    report(
                        'error',
                        line,
                        ViolationType.UNDECLARED_NET,
                        '%s uses undeclared net %s' % (c.id, name),
                    )

    for net in netlist.nets:
        if not net.pins:
            report(
                'warning',
                netlist.line_of('.NET ' + net.name),
                ViolationType.EMPTY_NET,
                'net %s has no pins' % net.name,
            )
        elif len(net.pins) == 1:
            component_id, index = net.pins[0]
            report(
                'warning',
                netlist.line_of(component_id),
                ViolationType.FLOATING_TERMINAL,
                'terminal %d of %s is floating on net %s'
                % (index, component_id, net.name),
            )

    violations.sort(key=lambda v: (v.line, v.code))
    for v in violations:
        logger.debug('Netlist violation %s', v)
    return violations
