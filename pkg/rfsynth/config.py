from __future__ import unicode_literals

import collections
import configparser
import logging
import os

import rfsynth
from rfsynth import utils
from rfsynth.neuralnet import HIDDEN_WIDTHS
from rfsynth.pcell import CapStack, ResTech
from rfsynth.placement import EmRules


__all__ = ['Config', 'DEFAULT_TECH_FILE']

logger = logging.getLogger(__name__)


DEFAULT_TECH_FILE = os.path.join(
    os.path.dirname(__file__), 'data', 'placeholder.tech'
)
"""Path to the placeholder technology file shipped with rfsynth.

None of its numbers are foundry data.
"""

ROUTING_LAYERS = ('M1', 'QA', 'QB')


class Config(object):

    """The technology rules and flow settings.

    Create an instance and assign to its attributes to configure, or load a
    technology file. Then pass the config to a :class:`Flow`::

        >>> config = rfsynth.Config()
        >>> config.load_tech_file('my.tech')
        >>> config.guard_fraction = 0.2
        >>> flow = rfsynth.Flow(config=config)

    Every attribute has a default, so ``rfsynth.Config()`` alone is a
    working, if fictional, technology.
    """

    def __init__(self):
        # Defaults
        self.layers = collections.OrderedDict(
            [
                ('OUTLINE', (0, 0)),
                ('M1', (10, 0)),
                ('QA', (11, 0)),
                ('QB', (12, 0)),
                ('M2', (13, 0)),
                ('M3', (14, 0)),
                ('M4', (15, 0)),
                ('M5', (16, 0)),
                ('RES', (20, 0)),
                ('PIN', (63, 0)),
            ]
        )

        self.spacing_low = 10.0
        self.spacing_high = 30.0
        self.freq_low = 5.0
        self.freq_high = 40.0
        self.guard_fraction = 0.15
        self.default_frequency = 10.0

        self.cap_stacks = [
            CapStack('MOM3', 1.1, ('M1', 'M2', 'M3')),
            CapStack('MOM5', 2.0, ('M1', 'M2', 'M3', 'M4', 'M5')),
        ]
        self.rs = 50.0
        self.r_end = 5.0
        self.pitch_x = 0.5
        self.pitch_y = 1.0
        self.pcell_step = 0.01
        self.pcell_tolerance = 0.005
        self.max_tiles = 64

        self.overlap_weight = 1e4
        self.spacing_weight = 1.0
        self.translate_step = 5.0
        self.moves_per_device = 10
        self.m_margin = 2.0
        self.region_margin = 50.0
        self.nmos_size = 10.0

        self.pitch = 0.1
        self.route_widths = collections.OrderedDict(
            (name, 0.5) for name in ROUTING_LAYERS
        )
        self.device_clearance_ratio = 0.1
        self.net_clearance_ratio = 0.1
        self.grid_margin_steps = 20
        self.via_mode = 'proportional'
        self.via_penalty = 10.0
        self.max_dogleg = 50

        self.default_width = 5.0
        self.inverse_lr = 0.01
        self.inverse_steps = 3000
        self.q_target = None

        self.hidden_widths = HIDDEN_WIDTHS
        self.checkpoint = None
        self.autotrain_samples = 20000
        self.autotrain_epochs = 60
        self.batch_size = 16384
        self.learning_rate = 0.001
        self.seed = 0

        self.tech_file = None

    @property
    def guard_fraction(self):
        """The DRC guard-band Δ as a fraction of the minimum spacing.

        Must lie within 0.10 and 0.20. Defaults to 0.15.
        """
        return self._guard_fraction

    @guard_fraction.setter
    def guard_fraction(self, value):
        if not 0.10 <= value <= 0.20:
            raise rfsynth.ConfigError(
                'guard_fraction must be within [0.10, 0.20], got %r' % value
            )
        self._guard_fraction = value

    @property
    def via_mode(self):
        """How the router charges a layer change.

        ``proportional`` (default) charges ten times the path cost
        accumulated so far. ``fixed`` charges :attr:`via_penalty` µm.
        """
        return self._via_mode

    @via_mode.setter
    def via_mode(self, value):
        if value not in ('proportional', 'fixed'):
            raise rfsynth.ConfigError(
                'via_mode must be proportional or fixed, got %r' % value
            )
        self._via_mode = value

    @property
    def routing_layers(self):
        """The three routing layers, bottom first."""
        return ROUTING_LAYERS

    @property
    def em_rules(self):
        """The :class:`EmRules` described by this config."""
        return EmRules(
            spacing_low=self.spacing_low,
            spacing_high=self.spacing_high,
            freq_low=self.freq_low,
            freq_high=self.freq_high,
            guard_fraction=self.guard_fraction,
            margin=self.m_margin,
        )

    @property
    def res_tech(self):
        """The :class:`ResTech` described by this config."""
        return ResTech(self.rs, self.r_end, self.pitch_x, self.pitch_y)

    def layer(self, name):
        """Look up the GDSII ``(layer, datatype)`` of a logical layer."""
        try:
            return self.layers[name]
        except KeyError:
            raise rfsynth.ConfigError(
                'Layer %r is not in the layer map' % name
            )

    def validate(self):
        """Check the invariants of the technology rules.

        Raises :exc:`ConfigError` on the first broken rule.
        """
        pairs = list(self.layers.values())
        if len(set(pairs)) != len(pairs):
            raise rfsynth.ConfigError('Layer map is not injective: %r' % pairs)
        required = set(ROUTING_LAYERS) | {'OUTLINE', 'PIN', 'RES'}
        for stack in self.cap_stacks:
            required.update(stack.layer_span)
            if stack.rho <= 0:
                raise rfsynth.ConfigError(
                    'Stack %s must have rho > 0' % stack.name
                )
            if len(stack.layer_span) < 3:
                raise rfsynth.ConfigError(
                    'Stack %s must span at least 3 layers' % stack.name
                )
        missing = sorted(required - set(self.layers))
        if missing:
            raise rfsynth.ConfigError('Undefined layers: %s' % missing)
        if not self.cap_stacks:
            raise rfsynth.ConfigError('At least one capacitor stack needed')
        for name in (
            'spacing_low',
            'spacing_high',
            'freq_low',
            'freq_high',
            'rs',
            'r_end',
            'pitch_x',
            'pitch_y',
            'pcell_step',
            'pcell_tolerance',
            'm_margin',
            'nmos_size',
            'pitch',
            'device_clearance_ratio',
            'net_clearance_ratio',
            'default_width',
            'inverse_lr',
        ):
            if not getattr(self, name) > 0:
                raise rfsynth.ConfigError('%s must be positive' % name)
        if self.spacing_high < self.spacing_low:
            raise rfsynth.ConfigError('spacing_high must be >= spacing_low')
        if self.freq_high <= self.freq_low:
            raise rfsynth.ConfigError('freq_high must be above freq_low')
        for layer, width in self.route_widths.items():
            if layer not in ROUTING_LAYERS or not width > 0:
                raise rfsynth.ConfigError(
                    'Bad route width %r for layer %r' % (width, layer)
                )

    def load_tech_file(self, filename=DEFAULT_TECH_FILE):
        """Load a technology file.

        If called without arguments, the placeholder technology shipped with
        rfsynth is loaded.

        The file is INI formatted. Values not present in the file keep their
        current setting. See ``rfsynth/data/placeholder.tech`` for every
        supported section and key.
        """
        parser = configparser.ConfigParser(
            inline_comment_prefixes=('#', ';;')
        )
        parser.optionxform = str
        with open(filename, encoding='utf-8') as fh:
            parser.read_file(fh)
        self.tech_file = filename
        for section in parser.sections():
            handler = getattr(self, '_load_%s' % section, None)
            if handler is None:
                raise rfsynth.ConfigError(
                    '%s: unknown section [%s]' % (filename, section)
                )
            try:
                handler(parser[section])
            except ValueError as exc:
                raise rfsynth.ConfigError(
                    '%s: [%s]: %s' % (filename, section, exc)
                )
        self.validate()
        logger.debug('Loaded technology file %s', filename)
        return self

    def _load_layers(self, section):
        self.layers = collections.OrderedDict()
        for name, value in section.items():
            layer, _, datatype = value.partition('/')
            self.layers[name] = (int(layer), int(datatype or 0))

    def _load_em(self, section):
        self._assign(
            section,
            {
                'spacing_low': utils.parse_float,
                'spacing_high': utils.parse_float,
                'freq_low': utils.parse_float,
                'freq_high': utils.parse_float,
                'guard_fraction': utils.parse_float,
                'default_frequency': utils.parse_float,
            },
        )

    def _load_pcell(self, section):
        stacks = []
        scalars = collections.OrderedDict()
        for key, value in section.items():
            if key.startswith('stack.'):
                rho, _, layers = value.partition(';')
                stacks.append(
                    CapStack(
                        key[len('stack.') :],
                        utils.parse_float(rho),
                        tuple(
                            name.strip()
                            for name in layers.split(',')
                            if name.strip()
                        ),
                    )
                )
            else:
                scalars[key] = value
        if stacks:
            self.cap_stacks = stacks
        self._assign(
            scalars,
            {
                'rs': utils.parse_float,
                'r_end': utils.parse_float,
                'pitch_x': utils.parse_float,
                'pitch_y': utils.parse_float,
                'step': utils.parse_float,
                'tolerance': utils.parse_float,
                'max_tiles': int,
            },
            aliases={'step': 'pcell_step', 'tolerance': 'pcell_tolerance'},
        )

    def _load_placement(self, section):
        self._assign(
            section,
            {
                'overlap_weight': utils.parse_float,
                'spacing_weight': utils.parse_float,
                'translate_step': utils.parse_float,
                'moves_per_device': int,
                'm_margin': utils.parse_float,
                'region_margin': utils.parse_float,
                'nmos_size': utils.parse_float,
            },
        )

    def _load_routing(self, section):
        widths = collections.OrderedDict(self.route_widths)
        scalars = collections.OrderedDict()
        for key, value in section.items():
            if key.startswith('width.'):
                widths[key[len('width.') :]] = utils.parse_float(value)
            else:
                scalars[key] = value
        self.route_widths = widths
        self._assign(
            scalars,
            {
                'pitch': utils.parse_float,
                'device_clearance_ratio': utils.parse_float,
                'net_clearance_ratio': utils.parse_float,
                'grid_margin_steps': int,
                'via_mode': str,
                'via_penalty': utils.parse_float,
                'max_dogleg': int,
            },
        )

    def _load_inductor(self, section):
        self._assign(
            section,
            {
                'default_width': utils.parse_float,
                'lr': utils.parse_float,
                'steps': int,
                'q_target': _optional_float,
            },
            aliases={'lr': 'inverse_lr', 'steps': 'inverse_steps'},
        )

    def _load_model(self, section):
        self._assign(
            section,
            {
                'hidden_widths': _int_tuple,
                'checkpoint': self._beside_tech_file,
                'autotrain_samples': int,
                'autotrain_epochs': int,
                'batch_size': int,
                'learning_rate': utils.parse_float,
                'seed': int,
            },
        )

    def _beside_tech_file(self, value):
        if not value or os.path.isabs(value) or self.tech_file is None:
            return value or None
        return os.path.join(os.path.dirname(self.tech_file), value)

    @property
    def checkpoint_path(self):
        """Where the Q model checkpoint is read from and auto-trained
        models are saved to.

        An explicit :attr:`checkpoint` wins. Otherwise the checkpoint lives
        beside a user technology file as ``rfsynth-q.json``. With the
        placeholder technology and no explicit checkpoint this is
        :class:`None`, and auto-trained models are not saved.
        """
        if self.checkpoint:
            return self.checkpoint
        if self.tech_file is None or (
            os.path.abspath(self.tech_file)
            == os.path.abspath(DEFAULT_TECH_FILE)
        ):
            return None
        return os.path.join(
            os.path.dirname(os.path.abspath(self.tech_file)), 'rfsynth-q.json'
        )

    def _assign(self, section, converters, aliases=None):
        aliases = aliases or {}
        for key, value in section.items():
            if key not in converters:
                raise ValueError('unknown key %r' % key)
            setattr(self, aliases.get(key, key), converters[key](value))


def _optional_float(value):
    if value.strip().lower() in ('', 'none'):
        return None
    return utils.parse_float(value)


def _int_tuple(value):
    return tuple(int(v) for v in value.replace(',', ' ').split())
