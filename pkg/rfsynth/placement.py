from __future__ import unicode_literals

import collections
import logging
import math

import numpy as np

from rfsynth import utils
from rfsynth.geometry import (
    DIRECTIONS,
    ROTATIONS,
    Rect,
    escape_faces,
    rect_distance,
    rotate_point,
    rotated_size,
)


__all__ = [
    'CostBreakdown',
    'DeviceFootprint',
    'EmRules',
    'Placement',
    'PlacementEvent',
    'PlacementResult',
    'Position',
    'connectivity_degree',
    'connectivity_order',
    'footprint_from_cell',
    'hpwl',
    'initial_placement',
    'local_search',
    'min_spacing',
    'overlap_area',
    'place',
    'placement_cost',
    'rotation_score',
    'select_rotations',
]

logger = logging.getLogger(__name__)


class PlacementEvent(object):

    """Placement events.

    Emitted by :func:`local_search` on the ``emitter`` it is given.
    """

    MOVE_ACCEPTED = 'move_accepted'
    """Called when a local search move lowered the cost.

    :param move: ``('swap', id_a, id_b)`` or ``('translate', id, dx, dy)``
    :param cost: the :class:`CostBreakdown` after the move
    """


class EmRules(
    collections.namedtuple(
        'EmRules',
        [
            'spacing_low',
            'spacing_high',
            'freq_low',
            'freq_high',
            'guard_fraction',
            'margin',
        ],
    )
):

    """Frequency-dependent EM spacing rules.

    Spacing is ``spacing_low`` µm below ``freq_low`` GHz, ``spacing_high``
    above ``freq_high`` GHz and linear in between, then widened by the
    ``guard_fraction`` DRC guard band. ``margin`` is the pin escape margin
    added to the required escape distance when scoring rotations.
    """

    __slots__ = ()


EmRules.__new__.__defaults__ = (10.0, 30.0, 5.0, 40.0, 0.15, 2.0)


def min_spacing(f, rules):
    """Minimum device spacing in µm at ``f`` GHz, guard band included."""
    if f < rules.freq_low:
        base = rules.spacing_low
    elif f > rules.freq_high:
        base = rules.spacing_high
    else:
        base = rules.spacing_low + (rules.spacing_high - rules.spacing_low) * (
            f - rules.freq_low
        ) / (rules.freq_high - rules.freq_low)
    return base * (1 + rules.guard_fraction)


DeviceFootprint = collections.namedtuple(
    'DeviceFootprint', ['id', 'width', 'height', 'pins', 'kind']
)
"""Bounding box and pins of a device before placement.

``pins`` is the list of :class:`~rfsynth.Pin` in terminal order, with
offsets relative to the lower-left corner.
"""


def footprint_from_cell(device_id, cell):
    """Build the :class:`DeviceFootprint` of a component from its cell."""
    for pin in cell.pins:
        assert cell.bbox.contains(pin.x, pin.y, tol=1e-9), (
            'Pin %s of %s lies outside its cell' % (pin.name, cell.name)
        )
    return DeviceFootprint(
        device_id, cell.width, cell.height, tuple(cell.pins), cell.kind
    )


Position = collections.namedtuple('Position', ['x', 'y', 'theta'])
"""Lower-left corner of the rotated bounding box and rotation in degrees."""


class Placement(object):

    """Positions and rotations of a set of devices.

    Placements are snapshots: :meth:`moved` returns a new placement and
    leaves the original untouched.
    """

    def __init__(self, devices, positions):
        self._devices = collections.OrderedDict((d.id, d) for d in devices)
        self._positions = collections.OrderedDict()
        for device_id in self._devices:
            x, y, theta = positions[device_id]
            assert theta in ROTATIONS, 'Bad rotation %r' % theta
            assert math.isfinite(x) and math.isfinite(y), (
                'Non-finite position for %s' % device_id
            )
            self._positions[device_id] = Position(x, y, theta)

    def __repr__(self):
        return 'Placement(%s)' % ', '.join(
            '%s=(%g, %g, %d)' % ((i,) + tuple(p))
            for i, p in self._positions.items()
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self._positions == other._positions
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def __len__(self):
        return len(self._devices)

    def __contains__(self, device_id):
        return device_id in self._devices

    @property
    def ids(self):
        return list(self._devices)

    @property
    def devices(self):
        return list(self._devices.values())

    def device(self, device_id):
        return self._devices[device_id]

    def position(self, device_id):
        return self._positions[device_id]

    def bbox(self, device_id):
        """The placed, rotated bounding box of a device."""
        device = self._devices[device_id]
        x, y, theta = self._positions[device_id]
        w, h = rotated_size(device.width, device.height, theta)
        return Rect(x, y, x + w, y + h)

    def boxes(self):
        return [self.bbox(i) for i in self._devices]

    def bounding_box(self):
        return Rect.bounding(self.boxes())

    def pin_position(self, device_id, terminal):
        """Absolute position of a pin, by terminal index or pin name."""
        device = self._devices[device_id]
        if isinstance(terminal, int):
            pin = device.pins[terminal]
        else:
            pin = next(p for p in device.pins if p.name == terminal)
        x, y, theta = self._positions[device_id]
        px, py = rotate_point(
            pin.x, pin.y, theta, device.width, device.height
        )
        return x + px, y + py

    def moved(self, device_id, x=None, y=None, theta=None):
        """Copy of this placement with one device moved or rotated."""
        old = self._positions[device_id]
        positions = dict(self._positions)
        positions[device_id] = Position(
            old.x if x is None else x,
            old.y if y is None else y,
            old.theta if theta is None else theta,
        )
        return Placement(self.devices, positions)

    def translated(self, dx, dy):
        return Placement(
            self.devices,
            {
                i: Position(p.x + dx, p.y + dy, p.theta)
                for i, p in self._positions.items()
            },
        )

    def total_overlap(self):
        boxes = self.boxes()
        return sum(
            overlap_area(boxes[i], boxes[j])
            for i in range(len(boxes))
            for j in range(i + 1, len(boxes))
        )

    def to_records(self):
        """List of ``{id, x, y, theta}`` dicts in device order."""
        return [
            collections.OrderedDict(
                [('id', i), ('x', p.x), ('y', p.y), ('theta', p.theta)]
            )
            for i, p in self._positions.items()
        ]


def connectivity_degree(device_id, nets):
    """Number of distinct nets touching ``device_id``."""
    return sum(
        1 for net in nets if any(cid == device_id for cid, _ in net.pins)
    )


def connectivity_order(devices, nets):
    """Device ids sorted by descending connectivity degree.

    The sort is stable, so equally connected devices keep their input order.
    """
    return [
        d.id
        for d in sorted(
            devices, key=lambda d: -connectivity_degree(d.id, nets)
        )
    ]


def initial_placement(devices, nets, spacing):
    """Row placement in connectivity order with ``spacing`` µm gaps.

    Rows are filled left to right and wrap once the next device would
    cross the row width cap, ``max(widest device, 2 * sqrt(total area))``
    with each device's area taken including one gap.
    """
    assert devices, 'initial_placement needs at least one device'
    by_id = {d.id: d for d in devices}
    order = connectivity_order(devices, nets)
    total = sum((d.width + spacing) * (d.height + spacing) for d in devices)
    cap = max(max(d.width for d in devices), 2 * math.sqrt(total))

    positions = {}
    x = y = row_height = 0.0
    for device_id in order:
        device = by_id[device_id]
        if x > 0 and x + device.width > cap:
            x = 0.0
            y += row_height + spacing
            row_height = 0.0
        positions[device_id] = Position(x, y, 0)
        x += device.width + spacing
        row_height = max(row_height, device.height)
    logger.debug('Row width cap %.3f for %d devices', cap, len(devices))
    return Placement(devices, positions)


def hpwl(placement, nets):
    """Criticality-weighted half-perimeter wirelength."""
    total = 0.0
    for net in nets:
        points = [
            placement.pin_position(cid, terminal)
            for cid, terminal in net.pins
            if cid in placement
        ]
        if not points:
            continue
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        total += net.weight * ((max(xs) - min(xs)) + (max(ys) - min(ys)))
    return total


def overlap_area(a, b):
    """Overlap area of two placed bounding boxes."""
    return a.overlap(b)


CostBreakdown = collections.namedtuple(
    'CostBreakdown', ['hpwl', 'overlap', 'spacing', 'total']
)
"""The terms of the placement objective.

``overlap`` is the raw overlap area and ``spacing`` the raw squared spacing
deficit; ``total`` applies their weights.
"""


def placement_cost(
    placement, nets, K=1e4, spacing=0.0, spacing_weight=1.0
):
    """Placement objective: weighted HPWL plus ``K`` times the pairwise
    overlap area plus a soft penalty on pairs closer than ``spacing`` µm.
    """
    boxes = placement.boxes()
    overlap = 0.0
    deficit = 0.0
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            overlap += overlap_area(boxes[i], boxes[j])
            if spacing > 0:
                gap = rect_distance(boxes[i], boxes[j])
                deficit += max(0.0, spacing - gap) ** 2
    wirelength = hpwl(placement, nets)
    return CostBreakdown(
        wirelength,
        overlap,
        deficit,
        wirelength + K * overlap + spacing_weight * deficit,
    )


def local_search(
    placement,
    cost_fn,
    T_max,
    order=None,
    seed=0,
    step=5.0,
    pitch=0.1,
    emitter=None,
):
    """Improve ``placement`` with swap and translate moves.

    Even iterations swap the centres of two devices adjacent in ``order``,
    round robin. Odd iterations translate one device by a uniform offset in
    ``[-step, step]`` µm per axis, quantized to ``pitch``. A move is kept
    only if it lowers ``cost_fn(placement).total`` without increasing the
    overlap term.

    Returns ``(placement, trace)`` where ``trace`` holds the total cost of
    the start state and after every accepted move.
    """
    assert T_max >= 0, 'T_max must be non-negative'
    order = list(order or placement.ids)
    rng = np.random.default_rng(seed)
    current = placement
    cost = cost_fn(current)
    trace = [cost.total]

    for t in range(T_max):
        if t % 2 == 0:
            if len(order) < 2:
                continue
            i = (t // 2) % (len(order) - 1)
            a, b = order[i], order[i + 1]
            candidate = _swap(current, a, b, pitch)
            move = ('swap', a, b)
        else:
            offsets = rng.uniform(-step, step, 2)
            dx, dy = (utils.snap(v, pitch) for v in offsets)
            device_id = order[(t // 2) % len(order)]
            pos = current.position(device_id)
            candidate = current.moved(
                device_id,
                x=utils.snap(pos.x + dx, pitch),
                y=utils.snap(pos.y + dy, pitch),
            )
            move = ('translate', device_id, dx, dy)

        new_cost = cost_fn(candidate)
        if (
            new_cost.total < cost.total
            and new_cost.overlap <= cost.overlap + 1e-12
        ):
            current, cost = candidate, new_cost
            trace.append(cost.total)
            logger.debug('Accepted %r, cost %.6f', move, cost.total)
            if emitter is not None:
                emitter.emit(PlacementEvent.MOVE_ACCEPTED, move, cost)
    return current, trace


def _swap(placement, a, b, pitch):
    box_a, box_b = placement.bbox(a), placement.bbox(b)
    ca = ((box_a.x0 + box_a.x1) / 2, (box_a.y0 + box_a.y1) / 2)
    cb = ((box_b.x0 + box_b.x1) / 2, (box_b.y0 + box_b.y1) / 2)
    result = placement.moved(
        a,
        x=utils.snap(cb[0] - box_a.width / 2, pitch),
        y=utils.snap(cb[1] - box_a.height / 2, pitch),
    )
    return result.moved(
        b,
        x=utils.snap(ca[0] - box_b.width / 2, pitch),
        y=utils.snap(ca[1] - box_b.height / 2, pitch),
    )


def _rotate_in_place(placement, device_id, theta, pitch):
    """Rotate a device about its current bounding box centre."""
    box = placement.bbox(device_id)
    device = placement.device(device_id)
    w, h = rotated_size(device.width, device.height, theta)
    cx, cy = (box.x0 + box.x1) / 2, (box.y0 + box.y1) / 2
    return placement.moved(
        device_id,
        x=utils.snap(cx - w / 2, pitch),
        y=utils.snap(cy - h / 2, pitch),
        theta=theta,
    )


def _free_run(x, y, direction, obstacles, region):
    """Clear distance from ``(x, y)`` along ``direction`` before hitting an
    obstacle or leaving ``region``."""
    ux, uy = DIRECTIONS[direction]
    if ux > 0:
        run = region.x1 - x
    elif ux < 0:
        run = x - region.x0
    elif uy > 0:
        run = region.y1 - y
    else:
        run = y - region.y0
    for box in obstacles:
        if ux:
            if not box.y0 <= y <= box.y1:
                continue
            gap = box.x0 - x if ux > 0 else x - box.x1
        else:
            if not box.x0 <= x <= box.x1:
                continue
            gap = box.y0 - y if uy > 0 else y - box.y1
        if gap >= 0:
            run = min(run, gap)
    return max(run, 0.0)


def rotation_score(device_id, theta, placement, rules, region, pitch=0.1):
    """Escape-space score of ``device_id`` rotated to ``theta``.

    For every pin and every escape direction the free run ``L_free`` to the
    nearest other device or the ``region`` edge is compared with the
    required run ``L_need``, the pin's distance to the device boundary plus
    ``rules.margin``. The score is the minimum over pins of the best
    direction's ``L_free - L_need``.

    Pins on the boundary escape only through the faces they sit on. NMOS
    source and drain pins only escape vertically.
    """
    rotated = _rotate_in_place(placement, device_id, theta, pitch)
    device = rotated.device(device_id)
    box = rotated.bbox(device_id)
    others = [rotated.bbox(i) for i in rotated.ids if i != device_id]

    score = None
    for pin in device.pins:
        x, y = rotated.pin_position(device_id, pin.name)
        need = (
            min(x - box.x0, box.x1 - x, y - box.y0, box.y1 - y) + rules.margin
        )
        directions = escape_faces(x, y, box)
        if device.kind == 'nmos' and pin.name in ('S', 'D'):
            directions = [d for d in directions if d in ('U', 'D')]
        best = max(
            (_free_run(x, y, d, others, region) - need for d in directions),
            default=-math.inf,
        )
        score = best if score is None else min(score, best)
    return 0.0 if score is None else score


def _legal_rotation(placement, rotated, device_id, spacing):
    box = rotated.bbox(device_id)
    before = placement.bbox(device_id)
    for other in placement.ids:
        if other == device_id:
            continue
        obox = placement.bbox(other)
        if box.overlap(obox) > 0:
            return False
        limit = min(spacing, rect_distance(before, obox))
        if rect_distance(box, obox) < limit - 1e-9:
            return False
    return True


def select_rotations(
    placement,
    rules,
    order=None,
    spacing=0.0,
    region=None,
    region_margin=50.0,
    pitch=0.1,
    cost_fn=None,
    ceiling=None,
):
    """Fix every device's rotation to the best :func:`rotation_score`.

    Devices are visited once in ``order``. A rotation is a candidate only
    if it overlaps no other device and does not bring one closer than
    ``spacing`` µm, and, when ``cost_fn`` is given, keeps the total cost at
    or below ``ceiling``. Ties go to 0° and then to the smaller angle.
    """
    if not len(placement):
        return placement
    order = list(order or placement.ids)
    if region is None:
        region = placement.bounding_box().inflate(region_margin)

    current = placement
    for device_id in order:
        base = current.position(device_id).theta
        best_theta, best_score = None, None
        for theta in ROTATIONS:
            candidate = _rotate_in_place(current, device_id, theta, pitch)
            if theta != base:
                if not _legal_rotation(current, candidate, device_id, spacing):
                    continue
                if cost_fn is not None and ceiling is not None:
                    if cost_fn(candidate).total > ceiling + 1e-9:
                        continue
            score = rotation_score(
                device_id, theta, current, rules, region, pitch
            )
            if best_score is None or score > best_score:
                best_theta, best_score = theta, score
        if best_theta != base:
            logger.debug(
                'Rotating %s to %d (score %.3f)',
                device_id,
                best_theta,
                best_score,
            )
            current = _rotate_in_place(current, device_id, best_theta, pitch)
    return current


PlacementResult = collections.namedtuple(
    'PlacementResult', ['placement', 'trace', 'initial', 'final']
)
"""Outcome of :func:`place`: the final :class:`Placement`, the local search
cost trace, and the :class:`CostBreakdown` before and after."""


def place(
    devices,
    nets,
    rules,
    freq,
    seed=0,
    K=1e4,
    spacing_weight=1.0,
    T_max=None,
    step=5.0,
    pitch=0.1,
    region_margin=50.0,
    emitter=None,
):
    """Place ``devices`` for operation at ``freq`` GHz.

    Runs the connectivity-ordered row placement, the local search with
    ``T_max`` moves (``10 * N**2`` by default) and a final rotation pass.
    Returns a :class:`PlacementResult`.
    """
    spacing = min_spacing(freq, rules)
    order = connectivity_order(devices, nets)
    start = initial_placement(devices, nets, spacing)

    def cost_fn(p):
        return placement_cost(
            p, nets, K=K, spacing=spacing, spacing_weight=spacing_weight
        )

    initial = cost_fn(start)
    if T_max is None:
        T_max = 10 * len(devices) ** 2
    searched, trace = local_search(
        start,
        cost_fn,
        T_max,
        order=order,
        seed=seed,
        step=step,
        pitch=pitch,
        emitter=emitter,
    )
    final = select_rotations(
        searched,
        rules,
        order=order,
        spacing=spacing,
        region_margin=region_margin,
        pitch=pitch,
        cost_fn=cost_fn,
        ceiling=initial.total,
    )
    final_cost = cost_fn(final)
    logger.info(
        'Placed %d devices: cost %.3f -> %.3f (%d accepted moves)',
        len(devices),
        initial.total,
        final_cost.total,
        len(trace) - 1,
    )
    return PlacementResult(final, trace, initial, final_cost)
