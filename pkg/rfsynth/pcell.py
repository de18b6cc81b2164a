from __future__ import unicode_literals

import collections
import logging
import math

import numpy as np

import rfsynth
from rfsynth.geometry import Cell, Pin, Rect, Shape


__all__ = [
    'CAP_L_BOUNDS',
    'CAP_W_BOUNDS',
    'CapDesign',
    'CapStack',
    'MAX_TILES',
    'RES_L_BOUNDS',
    'RES_W_BOUNDS',
    'ResDesign',
    'ResTech',
    'cap_geometry',
    'cap_value',
    'optimize_capacitor',
    'optimize_resistor',
    'res_geometry',
    'resistor_area',
    'resistor_stripe',
    'resistor_value',
    'within_tolerance',
]

logger = logging.getLogger(__name__)


CAP_W_BOUNDS = (1.0, 330.0)
CAP_L_BOUNDS = (1.0, 60.0)
RES_W_BOUNDS = (0.36, 3.72)
RES_L_BOUNDS = (0.40, 50.0)
MAX_TILES = 64

CONTACT_LAYER = 'M1'
RESISTOR_LAYER = 'RES'

# Relative slack absorbing the last ulp of the tolerance comparison.
_EPS = 1e-12


CapStack = collections.namedtuple('CapStack', ['name', 'rho', 'layer_span'])
"""A MOM capacitor metal stack with density ``rho`` in fF/µm²."""


class CapDesign(
    collections.namedtuple('CapDesign', ['stack', 'W', 'L', 'area', 'c_pF'])
):

    """A sized MOM capacitor. ``W`` and ``L`` are in µm."""

    __slots__ = ()

    @property
    def cell_name(self):
        return 'CAP_%s_%sx%s' % (
            self.stack.name,
            _token(self.W),
            _token(self.L),
        )


ResTech = collections.namedtuple(
    'ResTech', ['rs', 'r_end', 'pitch_x', 'pitch_y']
)
"""Poly resistor constants: sheet resistance ``rs`` in Ω/square, contact
end resistance ``r_end`` in Ω·µm, and the stripe pitch overheads in µm."""


class ResDesign(
    collections.namedtuple(
        'ResDesign', ['W', 'L', 'Ns', 'Np', 'r_ohm', 'area']
    )
):

    """A sized stripe resistor: ``Ns`` stripes in series per branch, ``Np``
    branches in parallel."""

    __slots__ = ()

    @property
    def cell_name(self):
        return 'RES_%sx%s_%ds%dp' % (
            _token(self.W),
            _token(self.L),
            self.Ns,
            self.Np,
        )


def cap_value(stack, W, L):
    """Capacitance in pF of a ``W`` x ``L`` µm plate on ``stack``."""
    return stack.rho * W * L * 1e-3


def resistor_stripe(tech, W, L):
    """Resistance in Ω of one ``W`` x ``L`` µm stripe with two contacts."""
    return tech.rs * L / W + 2 * tech.r_end / W


def resistor_value(tech, W, L, Ns, Np):
    """Total resistance of an ``Ns`` x ``Np`` stripe tiling."""
    return Ns / Np * (tech.rs * L / W + 2 * tech.r_end / W)


def resistor_area(tech, W, L, Ns, Np):
    """Area objective of a resistor including the stripe pitch overhead."""
    return Ns * Np * (W + tech.pitch_x) * (L + tech.pitch_y)


def within_tolerance(value, target, tol):
    return abs(value - target) <= (tol + _EPS) * target


def grid_indices(bounds, step):
    """Integer indices ``i`` with ``i * step`` inside the closed ``bounds``."""
    lo = int(math.ceil(bounds[0] / step - 1e-9))
    hi = int(math.floor(bounds[1] / step + 1e-9))
    return np.arange(lo, hi + 1, dtype=np.int64)


def optimize_capacitor(c_target, stacks, tol=0.005, step=0.01):
    """Find the minimum-area MOM capacitor within ``tol`` of ``c_target`` pF.

    ``W`` and ``L`` are searched on a grid of ``step`` µm inside
    :data:`CAP_W_BOUNDS` and :data:`CAP_L_BOUNDS` for every stack. Ties on
    area are broken by higher density, then the squarest plate, then the
    smaller ``W`` and finally the stack name.

    Raises :exc:`Unsatisfiable` if no grid point is within tolerance.
    """
    assert c_target > 0, 'c_target must be positive, got %r' % c_target
    assert stacks, 'At least one capacitor stack is required'

    w_idx = grid_indices(CAP_W_BOUNDS, step)
    l_idx = grid_indices(CAP_L_BOUNDS, step)
    Ls = l_idx * step

    best_key, best = None, None
    for stack in stacks:
        a_lo = (1 - tol) * c_target * 1e3 / stack.rho
        iw0 = np.maximum(np.ceil(a_lo / Ls / step), w_idx[0]).astype(np.int64)
        chosen = np.full(len(l_idx), -1, dtype=np.int64)
        for offset in (-1, 0, 1):
            iw = iw0 + offset
            Ws = iw * step
            c = stack.rho * Ws * Ls * 1e-3
            ok = (
                within_tolerance(c, c_target, tol)
                & (iw >= w_idx[0])
                & (iw <= w_idx[-1])
                & (chosen < 0)
            )
            chosen[ok] = iw[ok]
        rows = np.nonzero(chosen >= 0)[0]
        if not len(rows):
            continue
        iw, il = chosen[rows], l_idx[rows]
        order = np.lexsort((iw, np.abs(iw - il), iw * il))
        k = order[0]
        key = (
            int(iw[k] * il[k]),
            -stack.rho,
            int(abs(iw[k] - il[k])),
            int(iw[k]),
            stack.name,
        )
        if best_key is None or key < best_key:
            best_key, best = key, (stack, int(iw[k]), int(il[k]))

    if best is None:
        raise rfsynth.Unsatisfiable(
            'No capacitor within %.2f%% of %g pF' % (tol * 100, c_target)
        )
    stack, iw, il = best
    W, L = iw * step, il * step
    design = CapDesign(stack, W, L, W * L, cap_value(stack, W, L))
    logger.debug('Capacitor %g pF: %r', c_target, design)
    return design


def optimize_resistor(
    r_target, tech, tol=0.005, step=0.01, max_tiles=MAX_TILES
):
    """Find the minimum-area stripe resistor within ``tol`` of ``r_target``.

    The area objective is ``Ns * Np * (W + pitch_x) * (L + pitch_y)``, so the
    stripe pitch overhead counts. ``W`` and ``L`` are searched on a grid of
    ``step`` µm, ``Ns`` and ``Np`` in ``1..max_tiles``. Ties are broken by
    fewer tiles, then fewer series stripes, then smaller ``W`` and ``L``.

    Raises :exc:`Unsatisfiable` if no grid point is within tolerance.
    """
    assert r_target > 0, 'r_target must be positive, got %r' % r_target

    w_idx = grid_indices(RES_W_BOUNDS, step)
    l_idx = grid_indices(RES_L_BOUNDS, step)
    tiles = np.arange(1, max_tiles + 1, dtype=np.int64)

    ns, np_, iw = (
        a.ravel() for a in np.meshgrid(tiles, tiles, w_idx, indexing='ij')
    )
    Ws = iw * step
    stripe_lo = (1 - tol) * r_target * np_ / ns
    il0 = np.ceil((stripe_lo * Ws - 2 * tech.r_end) / tech.rs / step)
    il0 = np.maximum(il0, l_idx[0]).astype(np.int64)

    chosen = np.full(len(ns), -1, dtype=np.int64)
    for offset in (-1, 0, 1):
        il = il0 + offset
        Ls = il * step
        r = ns / np_ * (tech.rs * Ls / Ws + 2 * tech.r_end / Ws)
        ok = (
            within_tolerance(r, r_target, tol)
            & (il >= l_idx[0])
            & (il <= l_idx[-1])
            & (chosen < 0)
        )
        chosen[ok] = il[ok]

    rows = np.nonzero(chosen >= 0)[0]
    if not len(rows):
        raise rfsynth.Unsatisfiable(
            'No resistor within %.2f%% of %g ohm' % (tol * 100, r_target)
        )
    ns, np_, iw, il = ns[rows], np_[rows], iw[rows], chosen[rows]
    area = resistor_area(tech, iw * step, il * step, ns, np_)
    k = np.lexsort((il, iw, ns, ns * np_, area))[0]

    W, L, Ns, Np = iw[k] * step, il[k] * step, int(ns[k]), int(np_[k])
    design = ResDesign(
        float(W),
        float(L),
        Ns,
        Np,
        resistor_value(tech, W, L, Ns, Np),
        resistor_area(tech, W, L, Ns, Np),
    )
    logger.debug('Resistor %g ohm: %r', r_target, design)
    return design


def cap_geometry(design, pin_layer='M1'):
    """Layout of a MOM capacitor: one ``W`` x ``L`` plate per stack layer.

    Plates alternate between terminal ``A`` and ``B`` going up the stack.
    Pin ``A`` sits on the middle of the left edge, pin ``B`` on the middle of
    the right edge.
    """
    plate = Rect(0.0, 0.0, design.W, design.L)
    shapes = [
        Shape(layer, plate, 'AB'[i % 2])
        for i, layer in enumerate(design.stack.layer_span)
    ]
    mid = design.L / 2.0
    return Cell(
        design.cell_name,
        'capacitor',
        design.W,
        design.L,
        shapes=shapes,
        pins=[
            Pin('A', 0.0, mid, pin_layer),
            Pin('B', design.W, mid, pin_layer),
        ],
    )


def res_geometry(design, tech, pin_layer='M1'):
    """Layout of a stripe resistor.

    ``Ns`` rows by ``Np`` columns of ``W`` x ``L`` stripes at a pitch of
    ``W + pitch_x`` horizontally and ``L + pitch_y`` vertically, with a
    square contact inside each stripe end. Pin ``A`` is on the bottom edge
    of the first stripe, pin ``B`` on the top edge of the last one.
    """
    W, L = design.W, design.L
    dx, dy = W + tech.pitch_x, L + tech.pitch_y
    width = design.Np * W + (design.Np - 1) * tech.pitch_x
    height = design.Ns * L + (design.Ns - 1) * tech.pitch_y
    contact = min(W, L) / 2.0
    inset = (W - contact) / 2.0

    shapes = []
    for row in range(design.Ns):
        for col in range(design.Np):
            stripe = Rect(col * dx, row * dy, col * dx + W, row * dy + L)
            shapes.append(Shape(RESISTOR_LAYER, stripe, None))
            for y0 in (stripe.y0, stripe.y1 - contact):
                shapes.append(
                    Shape(
                        CONTACT_LAYER,
                        Rect(
                            stripe.x0 + inset,
                            y0,
                            stripe.x0 + inset + contact,
                            y0 + contact,
                        ),
                        None,
                    )
                )

    last_x = (design.Np - 1) * dx
    return Cell(
        design.cell_name,
        'resistor',
        width,
        height,
        shapes=shapes,
        pins=[
            Pin('A', W / 2.0, 0.0, pin_layer),
            Pin('B', last_x + W / 2.0, height, pin_layer),
        ],
    )


def _token(value):
    return ('%.2f' % value).replace('.', 'p')
