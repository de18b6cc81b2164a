from __future__ import unicode_literals

import collections
import contextlib
import io
import json
import logging
import os
import time

import rfsynth
from rfsynth import (
    gdsii,
    inductor,
    neuralnet,
    netlist as netlist_mod,
    pcell,
    placement as placement_mod,
    routing,
    utils,
)
from rfsynth.geometry import transistor_box
from rfsynth.netlist import ComponentKind


__all__ = ['Flow', 'FlowEvent', 'PipelineReport', 'STAGES']

logger = logging.getLogger(__name__)


STAGES = ('netlist', 'pcell', 'inductor', 'placement', 'routing', 'gdsii')
"""Pipeline stages in execution order."""


class FlowEvent(object):

    """Flow events.

    Using :class:`Flow` objects, you can register listener functions to be
    called when various events occurs in the pipeline. This class
    enumerates the available events and the arguments your listener
    functions will be called with.

    Example usage::

        import rfsynth

        def stage_finished(stage, seconds, flow):
            print('%s took %.1f s' % (stage, seconds))

        flow = rfsynth.Flow()
        flow.on(rfsynth.FlowEvent.STAGE_FINISHED, stage_finished, flow)

    All events will cause debug log statements to be emitted, even if no
    listeners are registered.
    """

    STAGE_STARTED = 'stage_started'
    """Called when a pipeline stage starts.

    :param stage: the stage name, one of :data:`STAGES`
    :type stage: string
    """

    STAGE_FINISHED = 'stage_finished'
    """Called when a pipeline stage completes without error.

    :param stage: the stage name
    :type stage: string
    :param seconds: wall time of the stage
    :type seconds: float
    """


class PipelineReport(object):

    """What a synthesis run produced.

    Stage timings are kept in :data:`STAGES` order. The run is clean when
    routing left no spacing violations and no unrouted nets.
    """

    def __init__(self):
        self.stages = collections.OrderedDict()
        self.pcells = []
        self.inductors = []
        self.placement = None
        self.violations = []
        self.unrouted = collections.OrderedDict()
        self.wirelength = 0.0
        self.num_vias = 0
        self.output = None

    def __repr__(self):
        return 'PipelineReport(%s, %d violations, %d unrouted)' % (
            self.status,
            len(self.violations),
            len(self.unrouted),
        )

    @property
    def clean(self):
        return not self.violations and not self.unrouted

    @property
    def status(self):
        return 'clean' if self.clean else 'violations'

    def to_dict(self):
        return collections.OrderedDict(
            [
                ('status', self.status),
                ('output', self.output),
                (
                    'stages',
                    collections.OrderedDict(
                        (k, round(v, 6)) for k, v in self.stages.items()
                    ),
                ),
                ('pcells', self.pcells),
                ('inductors', self.inductors),
                ('placement', self.placement),
                ('wirelength', round(self.wirelength, 6)),
                ('vias', self.num_vias),
                ('violations', ['%s' % (v,) for v in self.violations]),
                ('unrouted', self.unrouted),
            ]
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def save(self, filename):
        with io.open(filename, 'w', encoding='utf-8') as fh:
            fh.write(utils.to_unicode(self.to_json()))
            fh.write('\n')


class Flow(utils.EventEmitter):

    """The netlist to GDSII pipeline.

    If no ``config`` is provided, the default config is used.

    The flow emits :class:`FlowEvent` events around each stage, and passes
    itself as the event emitter to the trainer and the placer, so their
    :class:`~rfsynth.TrainEvent` and :class:`~rfsynth.PlacementEvent`
    events can be listened to on the flow as well.

    :param config: the technology rules and flow settings
    :type config: :class:`Config` or :class:`None`
    """

    def __init__(self, config=None):
        super(Flow, self).__init__()

        if config is not None:
            self.config = config
        else:
            self.config = rfsynth.Config()
        self.config.validate()

        self.model = None
        self.stats = None

    config = None
    """A :class:`Config` instance with the current configuration."""

    model = None
    """The Q surrogate :class:`~rfsynth.MLPModel`, loaded or trained on
    first use."""

    stats = None
    """The :class:`~rfsynth.NormStats` belonging to :attr:`model`."""

    @contextlib.contextmanager
    def stage(self, name, report=None):
        """Run a block as pipeline stage ``name``.

        Any :exc:`Error` escaping the block is re-raised as a
        :exc:`StageError` tagged with the stage name.
        """
        logger.info('Stage %s started', name)
        self.emit(FlowEvent.STAGE_STARTED, name)
        started = time.time()
        try:
            yield
        except rfsynth.StageError:
            raise
        except rfsynth.Error as exc:
            logger.error('Stage %s failed: %s', name, exc)
            raise rfsynth.StageError(name, exc)
        seconds = time.time() - started
        if report is not None:
            report.stages[name] = seconds
        logger.info('Stage %s finished in %.3f s', name, seconds)
        self.emit(FlowEvent.STAGE_FINISHED, name, seconds)

    def train_model(self, samples=None, epochs=None, seed=None, save=True):
        """Train the Q surrogate on the synthetic oracle.

        Returns the :class:`~rfsynth.TrainReport` and the test split
        :class:`~rfsynth.Metrics`. The model is kept on the flow and saved
        to :attr:`Config.checkpoint_path` when there is one and ``save`` is
        true.
        """
        config = self.config
        seed = config.seed if seed is None else seed
        dataset = inductor.generate_dataset(
            config.autotrain_samples if samples is None else samples,
            seed=seed,
        )
        train_config = neuralnet.TrainConfig(
            batch_size=config.batch_size,
            max_epochs=config.autotrain_epochs if epochs is None else epochs,
            initial_lr=config.learning_rate,
            seed=seed,
            widths=config.hidden_widths,
        )
        self.model, self.stats, report = neuralnet.train(
            dataset, train_config, emitter=self
        )
        scores = neuralnet.evaluate(self.model, self.stats, dataset.test)
        path = config.checkpoint_path
        if save and path:
            neuralnet.save_checkpoint(
                path,
                self.model,
                self.stats,
                metadata=collections.OrderedDict(
                    [
                        ('samples', len(dataset)),
                        ('seed', seed),
                        ('train', report.to_dict()),
                        ('test', scores._asdict()),
                    ]
                ),
            )
        return report, scores

    def load_model(self):
        """Load the Q surrogate, training one if there is no checkpoint."""
        if self.model is not None:
            return self.model, self.stats
        path = self.config.checkpoint_path
        if path and os.path.exists(path):
            self.model, self.stats = neuralnet.load_checkpoint(
                path, widths=self.config.hidden_widths
            )
            logger.info('Loaded Q model from %s', path)
        else:
            logger.warning(
                'No Q model checkpoint%s; training on the synthetic oracle',
                ' at %s' % path if path else '',
            )
            self.train_model()
        return self.model, self.stats

    def read_netlist(self, source):
        """Parse and validate a netlist file name or :class:`Netlist`.

        Raises :exc:`ValidationError` for error-severity violations;
        warnings are logged.
        """
        if isinstance(source, netlist_mod.Netlist):
            circuit = source
        else:
            circuit = netlist_mod.load_netlist(source)
        violations = netlist_mod.validate(
            circuit, default_width=self.config.default_width
        )
        for violation in rfsynth.Error.maybe_raise(violations):
            logger.warning('%s', violation)
        return circuit

    def frequency(self, circuit):
        if circuit.global_freq is not None:
            return circuit.global_freq
        return self.config.default_frequency

    def size_components(self, circuit, report=None):
        """Size resistors and capacitors and box the transistors.

        Returns an ordered mapping of component id to :class:`Cell`.
        """
        config = self.config
        cells = collections.OrderedDict()
        for c in circuit.components:
            if c.kind == ComponentKind.CAPACITOR:
                design = pcell.optimize_capacitor(
                    c.value,
                    config.cap_stacks,
                    tol=config.pcell_tolerance,
                    step=config.pcell_step,
                )
                cells[c.id] = pcell.cap_geometry(design)
                entry = [('value', design.c_pF), ('stack', design.stack.name)]
            elif c.kind == ComponentKind.RESISTOR:
                design = pcell.optimize_resistor(
                    c.value,
                    config.res_tech,
                    tol=config.pcell_tolerance,
                    step=config.pcell_step,
                    max_tiles=config.max_tiles,
                )
                cells[c.id] = pcell.res_geometry(design, config.res_tech)
                entry = [
                    ('value', design.r_ohm),
                    ('Ns', design.Ns),
                    ('Np', design.Np),
                ]
            elif c.kind == ComponentKind.NMOS:
                cells[c.id] = transistor_box(config.nmos_size)
                entry = []
            else:
                continue
            cell = cells[c.id]
            logger.debug('Sized %s as %s', c.id, cell.name)
            if report is not None and c.kind != ComponentKind.NMOS:
                report.pcells.append(
                    collections.OrderedDict(
                        [
                            ('id', c.id),
                            ('kind', c.kind),
                            ('target', c.value),
                            ('cell', cell.name),
                            ('area', round(design.area, 6)),
                        ]
                        + entry
                    )
                )
        return cells

    def inductor_spec(self, circuit, component):
        freq = component.freq_hint
        if freq is None:
            freq = circuit.global_freq
        width = component.width_hint
        if width is None:
            width = self.config.default_width
        return inductor.InductorSpec(freq, width, component.value)

    def design_inductors(self, circuit, report=None):
        """Inverse-design every inductor of ``circuit``.

        Returns an ordered mapping of component id to :class:`Cell`.
        """
        coils = [
            c for c in circuit.components if c.kind == ComponentKind.INDUCTOR
        ]
        cells = collections.OrderedDict()
        if not coils:
            return cells
        model, stats = self.load_model()
        cfg = inductor.InverseConfig(
            lr=self.config.inverse_lr,
            max_steps=self.config.inverse_steps,
            q_target=self.config.q_target,
        )
        for c in coils:
            spec = self.inductor_spec(circuit, c)
            result = inductor.inverse_design(model, stats, spec, cfg)
            layout = inductor.legalize(result.vars, spec)
            cells[c.id] = inductor.inductor_geometry(spec, layout)
            q_oracle = inductor.synthetic_q_oracle(list(spec) + list(layout))
            logger.info(
                'Inductor %s: Lv=%.2f Lh=%.2f Lcn=%.2f, Q %.2f predicted',
                c.id,
                layout.Lv,
                layout.Lh,
                layout.Lcn,
                result.q_pred,
            )
            if report is not None:
                report.inductors.append(
                    collections.OrderedDict(
                        [
                            ('id', c.id),
                            ('f', spec.f),
                            ('W', spec.W),
                            ('L', spec.L),
                            ('Lv', layout.Lv),
                            ('Lh', layout.Lh),
                            ('Lcn', layout.Lcn),
                            ('q_pred', round(result.q_pred, 6)),
                            ('q_oracle', round(q_oracle, 6)),
                            ('steps', result.steps),
                        ]
                    )
                )
        return cells

    def place(self, circuit, cells, seed=None, report=None):
        """Place the sized components. Returns a :class:`Placement`."""
        config = self.config
        devices = [
            placement_mod.footprint_from_cell(c.id, cells[c.id])
            for c in circuit.components
        ]
        if not devices:
            return placement_mod.Placement([], {})
        result = placement_mod.place(
            devices,
            circuit.nets,
            config.em_rules,
            self.frequency(circuit),
            seed=config.seed if seed is None else seed,
            K=config.overlap_weight,
            spacing_weight=config.spacing_weight,
            T_max=config.moves_per_device * len(devices) ** 2,
            step=config.translate_step,
            pitch=config.pitch,
            region_margin=config.region_margin,
            emitter=self,
        )
        if report is not None:
            report.placement = collections.OrderedDict(
                [
                    ('initial', result.initial._asdict()),
                    ('final', result.final._asdict()),
                    ('moves', len(result.trace) - 1),
                    ('devices', result.placement.to_records()),
                ]
            )
        return result.placement

    def spacing_policy(self, circuit):
        config = self.config
        return routing.SpacingPolicy.from_rules(
            self.frequency(circuit),
            config.em_rules,
            device_ratio=config.device_clearance_ratio,
            net_ratio=config.net_clearance_ratio,
            widths=config.route_widths,
            via_mode=config.via_mode,
            via_penalty=config.via_penalty,
        )

    def route(self, circuit, placed, report=None):
        """Route every net. Returns a :class:`RoutedDesign`."""
        config = self.config
        design = routing.route_all(
            circuit,
            placed,
            self.spacing_policy(circuit),
            pitch=config.pitch,
            margin_steps=config.grid_margin_steps,
            max_dogleg=config.max_dogleg,
        )
        if report is not None:
            report.violations = list(design.violations)
            report.unrouted = collections.OrderedDict(design.unrouted)
            report.wirelength = design.wirelength
            report.num_vias = design.num_vias
        return design

    def synth(self, source, out=None, seed=None, timestamp=None, name=None):
        """Run the whole pipeline on a netlist file or :class:`Netlist`.

        Writes the GDSII library to ``out`` when given, only after every
        stage has succeeded. Returns ``(library, report)``.

        Raises :exc:`StageError` naming the stage that failed.
        """
        report = PipelineReport()
        with self.stage('netlist', report):
            circuit = self.read_netlist(source)
        with self.stage('pcell', report):
            cells = self.size_components(circuit, report)
        with self.stage('inductor', report):
            cells.update(self.design_inductors(circuit, report))
        with self.stage('placement', report):
            placed = self.place(circuit, cells, seed=seed, report=report)
        with self.stage('routing', report):
            routed = self.route(circuit, placed, report)
        with self.stage('gdsii', report):
            lib = gdsii.assemble_design(
                circuit,
                placed,
                routed,
                cells,
                self.config.layers,
                name=name or 'RFSYNTH',
                timestamp=timestamp,
            )
            if out is not None:
                gdsii.save_gds(lib, out)
                report.output = out
        if report.clean:
            logger.info('Synthesis clean')
        else:
            logger.warning(
                'Synthesis finished with %d spacing violations and %d '
                'unrouted nets',
                len(report.violations),
                len(report.unrouted),
            )
        return lib, report
