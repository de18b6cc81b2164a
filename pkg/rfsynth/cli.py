from __future__ import print_function, unicode_literals

import argparse
import collections
import datetime
import io
import json
import logging
import sys

import rfsynth
from rfsynth import inductor, netlist


__all__ = ['ExitCode', 'main', 'make_parser']

logger = logging.getLogger(__name__)


class ExitCode(object):
    CLEAN = 0
    VIOLATIONS = 1
    USAGE = 2
    INTERNAL = 3


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--tech',
        action='store',
        metavar='FILE',
        help='Technology file (default: the bundled placeholder)',
    )
    common.add_argument(
        '--seed', action='store', type=int, help='Random seed override'
    )
    common.add_argument(
        '--out', action='store', metavar='FILE', help='Output file'
    )
    common.add_argument(
        '--report',
        action='store',
        metavar='FILE',
        help='Write a JSON report to this file',
    )
    common.add_argument(
        '-v', '--verbose', action='store_true', help='Turn on debug logging'
    )

    parser = argparse.ArgumentParser(
        prog='rfsynth', description='RF netlist to GDSII synthesis'
    )
    subparsers = parser.add_subparsers(
        dest='command', help='sub-command --help'
    )
    subparsers.required = True

    synth_parser = subparsers.add_parser(
        'synth', parents=[common], help='Run the whole pipeline'
    )
    synth_parser.add_argument('netlist', help='Netlist file')
    synth_parser.add_argument(
        '--timestamp',
        action='store_true',
        help='Stamp the GDSII file with the current time instead of the epoch',
    )

    train_parser = subparsers.add_parser(
        'train', parents=[common], help='Train the inductor Q model'
    )
    train_parser.add_argument(
        '--n', action='store', type=int, default=None, help='Sample count'
    )
    train_parser.add_argument(
        '--epochs', action='store', type=int, default=None, help='Epoch limit'
    )

    inv_parser = subparsers.add_parser(
        'invdesign', parents=[common], help='Design one inductor layout'
    )
    inv_parser.add_argument(
        '--f', action='store', type=float, required=True, help='GHz'
    )
    inv_parser.add_argument(
        '--w',
        action='store',
        type=float,
        required=True,
        help='Trace width, µm',
    )
    inv_parser.add_argument(
        '--l', action='store', type=float, required=True, help='Inductance, pH'
    )
    inv_parser.add_argument(
        '--checkpoint', action='store', metavar='FILE', help='Q model file'
    )
    inv_parser.add_argument(
        '--steps', action='store', type=int, default=None, help='Adam steps'
    )

    for name, text in [
        ('place', 'Size and place a netlist'),
        ('route', 'Size, place and route a netlist'),
    ]:
        stage_parser = subparsers.add_parser(name, parents=[common], help=text)
        stage_parser.add_argument('netlist', help='Netlist file')

    check_parser = subparsers.add_parser(
        'check', parents=[common], help='Validate a netlist'
    )
    check_parser.add_argument('netlist', help='Netlist file')
    check_parser.add_argument(
        '--strict',
        action='store_true',
        help='Require every net to be declared with .NET',
    )

    return parser


def _config(args):
    config = rfsynth.Config()
    if args.tech:
        config.load_tech_file(args.tech)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _write_json(filename, doc):
    with io.open(filename, 'w', encoding='utf-8') as fh:
        fh.write(json.dumps(doc, indent=2))
        fh.write('\n')


def _print_problems(violations, unrouted=None):
    for violation in violations:
        print(violation, file=sys.stderr)
    for net, reason in (unrouted or {}).items():
        print('unrouted:%s:%s' % (net, reason), file=sys.stderr)


def synth(args):
    flow = rfsynth.Flow(_config(args))
    timestamp = None
    if args.timestamp:
        timestamp = datetime.datetime.now().replace(microsecond=0)
    _, report = flow.synth(args.netlist, out=args.out, timestamp=timestamp)
    if args.report:
        report.save(args.report)
    _print_problems(report.violations, report.unrouted)
    print(
        '%s: %d violations, %d unrouted nets, %.1f um wire, %d vias'
        % (
            report.status,
            len(report.violations),
            len(report.unrouted),
            report.wirelength,
            report.num_vias,
        )
    )
    return ExitCode.CLEAN if report.clean else ExitCode.VIOLATIONS


def train(args):
    config = _config(args)
    if args.out:
        config.checkpoint = args.out
    flow = rfsynth.Flow(config)
    flow.on(rfsynth.TrainEvent.EPOCH_FINISHED, _log_epoch)
    report, scores = flow.train_model(samples=args.n, epochs=args.epochs)
    rows = [
        ('epochs', '%d' % report.epochs),
        ('best epoch', '%d' % report.best_epoch),
        ('final lr', '%g' % report.final_lr),
        ('MAE', '%.4f' % scores.mae),
        ('MSE', '%.4f' % scores.mse),
        ('RMSE', '%.4f' % scores.rmse),
        ('R2', '%.4f' % scores.r2),
        ('MAPE %', '%.2f' % scores.mape),
    ]
    for label, value in rows:
        print('%-12s %12s' % (label, value))
    if args.report:
        doc = collections.OrderedDict(
            [('train', report.to_dict()), ('test', scores._asdict())]
        )
        _write_json(args.report, doc)
    return ExitCode.CLEAN


def _log_epoch(epoch, train_loss, val_loss, lr):
    logger.info(
        'epoch %d: train %.5f, val %.5f, lr %g', epoch, train_loss, val_loss, lr
    )


def invdesign(args):
    config = _config(args)
    if args.checkpoint:
        config.checkpoint = args.checkpoint
    if args.steps is not None:
        config.inverse_steps = args.steps
    flow = rfsynth.Flow(config)
    model, stats = flow.load_model()
    spec = inductor.InductorSpec(args.f, args.w, args.l)
    result = inductor.inverse_design(
        model,
        stats,
        spec,
        inductor.InverseConfig(
            lr=config.inverse_lr,
            max_steps=config.inverse_steps,
            q_target=config.q_target,
        ),
    )
    layout = result.vars
    record = collections.OrderedDict(
        [
            ('f', spec.f),
            ('W', spec.W),
            ('L', spec.L),
            ('Lv', layout.Lv),
            ('Lh', layout.Lh),
            ('Lcn', layout.Lcn),
            ('q_pred', result.q_pred),
            (
                'q_oracle',
                inductor.synthetic_q_oracle(list(spec) + list(layout)),
            ),
            ('steps', result.steps),
            ('seconds', round(result.seconds, 4)),
        ]
    )
    print(json.dumps(record, indent=2))
    if args.report:
        _write_json(args.report, record)
    return ExitCode.CLEAN


def _prepare(args):
    flow = rfsynth.Flow(_config(args))
    with flow.stage('netlist'):
        circuit = flow.read_netlist(args.netlist)
    with flow.stage('pcell'):
        cells = flow.size_components(circuit)
    with flow.stage('inductor'):
        cells.update(flow.design_inductors(circuit))
    report = rfsynth.PipelineReport()
    with flow.stage('placement'):
        placed = flow.place(circuit, cells, report=report)
    return flow, circuit, placed, report


def place(args):
    _, _, placed, report = _prepare(args)
    records = placed.to_records()
    if args.out:
        _write_json(args.out, records)
    else:
        print(json.dumps(records, indent=2))
    if args.report:
        _write_json(args.report, report.placement)
    return ExitCode.CLEAN


def route(args):
    flow, circuit, placed, report = _prepare(args)
    with flow.stage('routing'):
        design = flow.route(circuit, placed, report)
    if args.out:
        with io.open(args.out, 'w', encoding='utf-8', newline='') as fh:
            design.write_csv(fh)
    else:
        design.write_csv(sys.stdout)
    _print_problems(design.violations, design.unrouted)
    if args.report:
        report.save(args.report)
    return ExitCode.CLEAN if design.clean else ExitCode.VIOLATIONS


def check(args):
    config = _config(args)
    circuit = netlist.load_netlist(args.netlist)
    violations = netlist.validate(
        circuit, strict=args.strict, default_width=config.default_width
    )
    _print_problems(violations)
    print(
        '%s: %d components, %d nets, %d violations'
        % (
            args.netlist,
            len(circuit.components),
            len(circuit.nets),
            len(violations),
        )
    )
    if any(v.severity == 'error' for v in violations):
        return ExitCode.VIOLATIONS
    return ExitCode.CLEAN


COMMANDS = {
    'synth': synth,
    'train': train,
    'invdesign': invdesign,
    'place': place,
    'route': route,
    'check': check,
}


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code

    logging.basicConfig(
        format='%(asctime)s %(name)s %(levelname)s: %(message)s',
        level=logging.DEBUG if args.verbose else logging.INFO,
    )

    try:
        return COMMANDS[args.command](args)
    except rfsynth.Error as error:
        logger.error('%s failed: %s', args.command, error)
        return ExitCode.VIOLATIONS
    except (IOError, OSError) as error:
        logger.error('%s failed: %s', args.command, error)
        return ExitCode.VIOLATIONS
    except Exception:
        logger.exception('%s failed with an internal error', args.command)
        return ExitCode.INTERNAL
