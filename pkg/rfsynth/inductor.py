from __future__ import unicode_literals

import collections
import logging
import math
import time

import numpy as np

import rfsynth
from rfsynth import neuralnet
from rfsynth.geometry import Cell, Pin, Rect, Shape


__all__ = [
    'DEFAULT_RANGES',
    'InductorSpec',
    'InverseConfig',
    'InverseResult',
    'LayoutVars',
    'QHistogram',
    'TraceStep',
    'box_bounds',
    'clamp_to_constraints',
    'generate_dataset',
    'grid_search_max',
    'inductor_geometry',
    'inverse_design',
    'legalize',
    'q_histogram',
    'random_specs',
    'self_resonance',
    'success_rate',
    'synthetic_q_oracle',
]

logger = logging.getLogger(__name__)


DEFAULT_RANGES = collections.OrderedDict(
    [('f', (1.0, 100.0)), ('W', (1.0, 15.0)), ('L', (50.0, 500.0))]
)
"""Sampling ranges of the target specification: GHz, µm and pH."""

Q_PEAK = 80.0
SIGMA = 35.0

LV_MAX = 100.0
LH_MAX = 100.0
LCN_BOUNDS = (1.0, 50.0)


InductorSpec = collections.namedtuple('InductorSpec', ['f', 'W', 'L'])
"""Target specification: frequency in GHz, trace width in µm, inductance
in pH."""


LayoutVars = collections.namedtuple('LayoutVars', ['Lv', 'Lh', 'Lcn'])
"""Inductor layout variables in µm: vertical and horizontal outer extent
and centre feed gap."""


class InverseConfig(
    collections.namedtuple(
        'InverseConfig', ['lr', 'max_steps', 'q_target', 'init']
    )
):

    """Settings of :func:`inverse_design`.

    ``q_target`` stops the search as soon as the predicted Q reaches it;
    :class:`None` runs all ``max_steps`` steps.
    """

    __slots__ = ()

    def __new__(
        cls, lr=0.01, max_steps=3000, q_target=None, init=(40.0, 40.0, 20.0)
    ):
        assert lr > 0, 'lr must be positive'
        assert max_steps >= 0, 'max_steps must be non-negative'
        return super(InverseConfig, cls).__new__(
            cls, lr, max_steps, q_target, LayoutVars(*init)
        )


TraceStep = collections.namedtuple(
    'TraceStep', ['step', 'Lv', 'Lh', 'Lcn', 'q_pred', 'best_q']
)

InverseResult = collections.namedtuple(
    'InverseResult', ['vars', 'q_pred', 'trace', 'steps', 'seconds']
)
"""Outcome of :func:`inverse_design`: the best layout seen, its predicted
Q, the per-step trace, the number of optimizer steps taken and the wall
time."""


def self_resonance(W, L):
    """Self-resonance frequency in GHz of the synthetic inductor model."""
    return 600.0 / np.sqrt(L) / np.sqrt(1.0 + W / 10.0)


def _optima(f, W, L):
    v_star = 20.0 + 0.04 * L + 40.0 * np.exp(-f / 25.0)
    h_star = 25.0 + 0.04 * L + 45.0 * np.exp(-f / 40.0) + W
    return v_star, h_star


def _oracle(x):
    f, W, L, Lv, Lh, Lcn = (x[:, i] for i in range(6))
    s = f / self_resonance(W, L)
    v_star, h_star = _optima(f, W, L)
    gauss = np.exp(-((Lv - v_star) ** 2 + (Lh - h_star) ** 2) / SIGMA ** 2)
    return (
        Q_PEAK
        * s
        / (s * s + 1.0)
        * gauss
        * (1.0 + 0.2 * np.tanh((Lcn - 25.0) / 10.0))
    )


def synthetic_q_oracle(x):
    """Closed-form stand-in for the simulated inductor Q.

    ``x`` is one ``(f, W, L, Lv, Lh, Lcn)`` row or an ``N x 6`` array. With
    ``s = f / f_sr(W, L)`` and ``f_sr = 600 / sqrt(L) / sqrt(1 + W / 10)``
    GHz::

        Q = 80 * s / (s**2 + 1)
              * exp(-((Lv - v*)**2 + (Lh - h*)**2) / 35**2)
              * (1 + 0.2 * tanh((Lcn - 25) / 10))

    where ``v* = 20 + 0.04 L + 40 exp(-f / 25)`` and
    ``h* = 25 + 0.04 L + 45 exp(-f / 40) + W``. Q is positive and below 48.

    Raises :exc:`DomainError` on non-positive or non-finite inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != 6:
        raise rfsynth.ShapeError('Oracle input needs 6 columns')
    if not (np.isfinite(x).all() and (x > 0).all()):
        raise rfsynth.DomainError('Oracle inputs must be positive and finite')
    q = _oracle(x)
    return float(q[0]) if single else q


def box_bounds(W):
    """Lower and upper layout bounds ``(Lv, Lh, Lcn)`` for trace width W.

    Raises :exc:`InfeasibleBox` if the box is empty.
    """
    if not W > 0:
        raise rfsynth.DomainError('W must be positive, got %r' % W)
    if W + 2 > LV_MAX or 2 * W + 4 > LH_MAX:
        raise rfsynth.InfeasibleBox('No feasible layout for W=%g' % W)
    lo = np.array([W + 2.0, 2.0 * W + 4.0, LCN_BOUNDS[0]])
    hi = np.array([LV_MAX, LH_MAX, LCN_BOUNDS[1]])
    return lo, hi


def clamp_to_constraints(v, W):
    """Project layout variables onto the box for trace width ``W``."""
    lo, hi = box_bounds(W)
    return LayoutVars(*(float(c) for c in np.clip(np.asarray(v), lo, hi)))


def _sample_rows(rng, n, ranges):
    f = rng.uniform(*ranges['f'], size=n)
    W = rng.uniform(*ranges['W'], size=n)
    L = rng.uniform(*ranges['L'], size=n)
    Lv = rng.uniform(W + 2.0, LV_MAX)
    Lh = rng.uniform(2.0 * W + 4.0, LH_MAX)
    Lcn = rng.uniform(*LCN_BOUNDS, size=n)
    return np.column_stack([f, W, L, Lv, Lh, Lcn])


def generate_dataset(n, ranges=None, seed=0):
    """Sample ``n`` inductors uniformly inside the box constraints and label
    them with :func:`synthetic_q_oracle`.

    Returns a :class:`~rfsynth.Dataset` split 80:10:10 with ``seed``.
    """
    assert n >= 1, 'n must be >= 1'
    ranges = collections.OrderedDict(DEFAULT_RANGES, **(ranges or {}))
    rng = np.random.default_rng(seed)
    features = _sample_rows(rng, n, ranges)
    q = synthetic_q_oracle(features)
    logger.info('Generated %d oracle samples (seed %d)', n, seed)
    return neuralnet.Dataset.from_arrays(features, q, seed=seed)


def random_specs(n, seed=0, ranges=None):
    """``n`` uniformly drawn :class:`InductorSpec`."""
    ranges = collections.OrderedDict(DEFAULT_RANGES, **(ranges or {}))
    rng = np.random.default_rng(seed)
    return [
        InductorSpec(
            float(rng.uniform(*ranges['f'])),
            float(rng.uniform(*ranges['W'])),
            float(rng.uniform(*ranges['L'])),
        )
        for _ in range(n)
    ]


def grid_search_max(spec, shape=(50, 50, 20)):
    """Best oracle Q on a dense grid over the layout box.

    Returns ``(LayoutVars, q)``.
    """
    lo, hi = box_bounds(spec.W)
    axes = [np.linspace(lo[i], hi[i], shape[i]) for i in range(3)]
    Lv, Lh, Lcn = (a.ravel() for a in np.meshgrid(*axes, indexing='ij'))
    n = len(Lv)
    x = np.column_stack(
        [
            np.full(n, spec.f),
            np.full(n, spec.W),
            np.full(n, spec.L),
            Lv,
            Lh,
            Lcn,
        ]
    )
    q = synthetic_q_oracle(x)
    k = int(np.argmax(q))
    return LayoutVars(float(Lv[k]), float(Lh[k]), float(Lcn[k])), float(q[k])


def _check_spec(spec):
    for name, value in zip(spec._fields, spec):
        if not (math.isfinite(value) and value > 0):
            raise rfsynth.DomainError(
                'Spec %s must be positive and finite, got %r' % (name, value)
            )


def inverse_design(model, stats, spec, cfg=None):
    """Find layout variables maximizing the model's predicted Q for ``spec``.

    Adam ascends the predicted Q with respect to ``(Lv, Lh, Lcn)`` using
    the model's input gradients, projecting onto the layout box after every
    step. The model itself is never updated. Stops after ``cfg.max_steps``
    steps or as soon as the prediction reaches ``cfg.q_target``, and
    returns the best iterate seen as an :class:`InverseResult`.

    Raises :exc:`InfeasibleBox` if the box for ``spec.W`` is empty.
    """
    cfg = cfg or InverseConfig()
    _check_spec(spec)
    lo, hi = box_bounds(spec.W)
    started = time.time()

    v = np.clip(np.asarray(cfg.init, dtype=np.float64), lo, hi)
    x = np.array([spec.f, spec.W, spec.L, v[0], v[1], v[2]])
    state = neuralnet.AdamState([v], lr=cfg.lr)
    best_v, best_q = v.copy(), -math.inf
    trace = []
    steps = 0

    while True:
        x[3:] = v
        q, grad = neuralnet.predict_and_gradient(model, stats, x)
        q = float(q[0])
        if q > best_q:
            best_q, best_v = q, v.copy()
        trace.append(TraceStep(steps, v[0], v[1], v[2], q, best_q))
        if cfg.q_target is not None and q >= cfg.q_target:
            break
        if steps >= cfg.max_steps:
            break
        neuralnet.adam_step([v], [-grad[0, 3:]], state)
        np.clip(v, lo, hi, out=v)
        assert ((v >= lo) & (v <= hi)).all(), 'Iterate left the box'
        steps += 1

    result = InverseResult(
        LayoutVars(*(float(c) for c in best_v)),
        best_q,
        trace,
        steps,
        time.time() - started,
    )
    logger.debug(
        'Inverse design %r: Q %.3f after %d steps', spec, best_q, steps
    )
    return result


def success_rate(
    model,
    stats,
    specs,
    threshold=10.0,
    oracle=synthetic_q_oracle,
    cfg=None,
):
    """Percentage of ``specs`` whose inverse-designed layout has an
    ``oracle`` Q above ``threshold``."""
    assert specs, 'success_rate needs at least one spec'
    hits = 0
    for spec in specs:
        result = inverse_design(model, stats, spec, cfg)
        q = oracle(list(spec) + list(result.vars))
        if q > threshold:
            hits += 1
    rate = 100.0 * hits / len(specs)
    logger.info(
        'Success rate %.2f%% (%d/%d above Q=%g)',
        rate,
        hits,
        len(specs),
        threshold,
    )
    return rate


def legalize(v, spec, step=0.01):
    """Snap ``v`` to a ``step`` µm grid and adjust it so that
    :func:`inductor_geometry` accepts it.

    ``Lv`` is raised above ``2 W`` and ``Lcn`` lowered to leave both bottom
    arms at least one ``step`` long.
    """
    lo, hi = box_bounds(spec.W)
    snapped = [round(c / step) * step for c in np.clip(v, lo, hi)]
    Lv, Lh, Lcn = (round(c, 9) for c in snapped)
    W = spec.W
    Lv = max(Lv, round((math.floor(round(2 * W / step, 6)) + 1) * step, 9))
    arms = math.floor(round((Lh - 2 * W) / step, 6)) - 2
    Lcn = min(Lcn, round(arms * step, 9))
    if Lv > LV_MAX or Lcn < step:
        raise rfsynth.GeometryError(
            'Cannot legalize %r for W=%g' % (tuple(v), W)
        )
    result = LayoutVars(Lv, Lh, Lcn)
    if any(abs(a - b) > step for a, b in zip(result, v)):
        logger.warning('Legalized inductor layout %r to %r', tuple(v), result)
    return result


def inductor_geometry(spec, v, layer='QB', pin_layer='M1'):
    """Single-turn rectangular inductor loop.

    The loop has outer extent ``Lh`` x ``Lv``, trace width ``W`` and a feed
    gap of width ``Lcn`` centred on the bottom edge. It is drawn as five
    rectangles: both sides, the top, and the two bottom arms. Pins ``A`` and
    ``B`` sit at the ends of the gap on the bottom edge.

    Raises :exc:`GeometryError` if ``W >= Lv / 2`` or the gap leaves no
    bottom arm.
    """
    W, Lv, Lh, Lcn = spec.W, v.Lv, v.Lh, v.Lcn
    if W >= Lv / 2.0:
        raise rfsynth.GeometryError(
            'Trace width %g too wide for Lv=%g' % (W, Lv)
        )
    if Lcn <= 0 or Lcn >= Lh - 2 * W:
        raise rfsynth.GeometryError(
            'Feed gap %g leaves no bottom arm for Lh=%g, W=%g' % (Lcn, Lh, W)
        )
    gap_l = (Lh - Lcn) / 2.0
    gap_r = (Lh + Lcn) / 2.0
    rects = [
        Rect(0.0, 0.0, W, Lv),
        Rect(Lh - W, 0.0, Lh, Lv),
        Rect(W, Lv - W, Lh - W, Lv),
        Rect(W, 0.0, gap_l, W),
        Rect(gap_r, 0.0, Lh - W, W),
    ]
    return Cell(
        'IND_%s_%sx%s_%s' % tuple(_token(c) for c in (W, Lv, Lh, Lcn)),
        'inductor',
        Lh,
        Lv,
        shapes=[Shape(layer, r, None) for r in rects],
        pins=[
            Pin('A', gap_l, 0.0, pin_layer),
            Pin('B', gap_r, 0.0, pin_layer),
        ],
    )


QHistogram = collections.namedtuple(
    'QHistogram', ['n', 'mean', 'std', 'counts', 'edges']
)


def q_histogram(targets, bins=25, q_range=(0.0, 50.0)):
    """Distribution summary of Q values, or of a dataset's targets."""
    if isinstance(targets, neuralnet.Dataset):
        targets = targets.targets
    targets = np.asarray(targets, dtype=np.float64)
    counts, edges = np.histogram(targets, bins=bins, range=q_range)
    return QHistogram(
        len(targets),
        float(targets.mean()) if len(targets) else 0.0,
        float(targets.std()) if len(targets) else 0.0,
        counts,
        edges,
    )


def _token(value):
    return ('%.2f' % value).replace('.', 'p')
