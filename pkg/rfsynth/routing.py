from __future__ import unicode_literals

import collections
import csv
import heapq
import logging
import math

import numpy as np
from networkx.utils import UnionFind

import rfsynth
from rfsynth.geometry import DIRECTIONS, Rect, escape_faces, rect_distance
from rfsynth.netlist import Violation, ViolationType
from rfsynth.placement import min_spacing


__all__ = [
    'LAYERS',
    'RoutePath',
    'RoutedDesign',
    'RoutingGrid',
    'SpacingPolicy',
    'astar_route',
    'build_grid',
    'check_spacing',
    'mst',
    'pin_escape',
    'route_all',
    'route_net',
]

logger = logging.getLogger(__name__)


LAYERS = ('M1', 'QA', 'QB')
"""Routing layers, bottom first. Vias connect adjacent layers."""

FREE = 0
DEVICE_HALO = 1
CORRIDOR = 2

SHARED = -2

VIA_FACTOR = 10

_TOL = 1e-6


class SpacingPolicy(
    collections.namedtuple(
        'SpacingPolicy',
        ['s_dev', 's_same', 'widths', 'via_mode', 'via_penalty'],
    )
):

    """Routing clearances in µm.

    ``s_dev`` separates wires from devices they do not connect to,
    ``s_same`` wires of different nets on one layer. ``widths`` maps each
    routing layer to its wire width. ``via_mode`` is ``proportional`` (a
    via costs ten times the path cost so far) or ``fixed`` (a via costs
    ``via_penalty`` µm).
    """

    __slots__ = ()

    def __new__(
        cls,
        s_dev,
        s_same,
        widths=None,
        via_mode='proportional',
        via_penalty=10.0,
    ):
        assert s_dev > 0 and s_same > 0, 'Clearances must be positive'
        assert via_mode in ('proportional', 'fixed'), via_mode
        widths = collections.OrderedDict(
            (layer, (widths or {}).get(layer, 0.5)) for layer in LAYERS
        )
        return super(SpacingPolicy, cls).__new__(
            cls, s_dev, s_same, widths, via_mode, via_penalty
        )

    @classmethod
    def from_rules(
        cls,
        freq,
        rules,
        device_ratio=0.1,
        net_ratio=0.1,
        widths=None,
        via_mode='proportional',
        via_penalty=10.0,
    ):
        """Scale both clearances from the EM spacing at ``freq`` GHz."""
        spacing = min_spacing(freq, rules)
        return cls(
            device_ratio * spacing,
            net_ratio * spacing,
            widths,
            via_mode,
            via_penalty,
        )

    @property
    def max_width(self):
        return max(self.widths.values())


class RoutingGrid(object):

    """A three-layer routing grid of nodes spaced ``pitch`` µm apart.

    Node ``(i, j, l)`` sits at ``(x0 + i * pitch, y0 + j * pitch)`` on layer
    ``LAYERS[l]``. Every node has a zone, free, device halo or pin
    corridor, and an owner: 0 when no committed wire claims it, the net
    number of the one net whose halo covers it, or -2 when several do.
    """

    def __init__(self, x0, y0, nx, ny, pitch=0.1, layers=LAYERS):
        assert pitch > 0, 'pitch must be positive'
        assert len(layers) == 3, 'The grid has exactly three layers'
        self.x0 = x0
        self.y0 = y0
        self.nx = nx
        self.ny = ny
        self.pitch = pitch
        self.layers = tuple(layers)
        size = len(self.layers) * nx * ny
        self._zone = bytearray(size)
        self._owner = np.zeros(size, dtype=np.int16)
        self.zone = np.frombuffer(self._zone, dtype=np.uint8).reshape(
            len(self.layers), nx, ny
        )
        self.owner = self._owner.reshape(len(self.layers), nx, ny)

    def __repr__(self):
        return 'RoutingGrid(%d x %d x %d, pitch=%g)' % (
            self.nx,
            self.ny,
            len(self.layers),
            self.pitch,
        )

    @property
    def extents(self):
        """``(xmin, xmax, ymin, ymax)`` in µm."""
        return (
            self.x0,
            self.x0 + (self.nx - 1) * self.pitch,
            self.y0,
            self.y0 + (self.ny - 1) * self.pitch,
        )

    def units(self, length):
        """Number of whole grid steps covering ``length`` µm."""
        return int(math.ceil(length / self.pitch - 1e-9))

    def _nearest(self, x, y):
        return (
            int(round((x - self.x0) / self.pitch)),
            int(round((y - self.y0) / self.pitch)),
        )

    def snap(self, x, y):
        """Coordinates of the node ``(x, y)`` is routed from, which may lie
        off the grid."""
        i, j = self._nearest(x, y)
        return (
            round(self.x0 + i * self.pitch, 9),
            round(self.y0 + j * self.pitch, 9),
        )

    def node_of(self, x, y, layer=0):
        i, j = self._nearest(x, y)
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise rfsynth.Unroutable('Point (%g, %g) is off the grid' % (x, y))
        return (i, j, layer)

    def point(self, node):
        i, j, l = node
        return (
            round(self.x0 + i * self.pitch, 9),
            round(self.y0 + j * self.pitch, 9),
            self.layers[l],
        )

    def index(self, node):
        i, j, l = node
        return (l * self.nx + i) * self.ny + j

    def node(self, index):
        l, rest = divmod(index, self.nx * self.ny)
        i, j = divmod(rest, self.ny)
        return (i, j, l)

    def inside(self, node):
        i, j, l = node
        return 0 <= i < self.nx and 0 <= j < self.ny and 0 <= l < 3

    def _open_range(self, lo, hi, origin, n):
        """Node indices strictly between ``lo`` and ``hi`` µm."""
        first = int(math.floor((lo - origin) / self.pitch + 1e-9)) + 1
        last = int(math.ceil((hi - origin) / self.pitch - 1e-9)) - 1
        return max(first, 0), min(last, n - 1)

    def _closed_range(self, lo, hi, origin, n):
        first = int(math.ceil((lo - origin) / self.pitch - 1e-9))
        last = int(math.floor((hi - origin) / self.pitch + 1e-9))
        return max(first, 0), min(last, n - 1)

    def block_interior(self, rect, zone=DEVICE_HALO):
        """Set the zone of every node strictly inside ``rect`` on all
        layers."""
        i0, i1 = self._open_range(rect.x0, rect.x1, self.x0, self.nx)
        j0, j1 = self._open_range(rect.y0, rect.y1, self.y0, self.ny)
        if i0 <= i1 and j0 <= j1:
            self.zone[:, i0 : i1 + 1, j0 : j1 + 1] = zone

    def open_corridor(self, rect):
        """Turn device halo nodes inside the closed ``rect`` into pin
        corridor nodes."""
        i0, i1 = self._closed_range(rect.x0, rect.x1, self.x0, self.nx)
        j0, j1 = self._closed_range(rect.y0, rect.y1, self.y0, self.ny)
        if i0 <= i1 and j0 <= j1:
            block = self.zone[:, i0 : i1 + 1, j0 : j1 + 1]
            block[block == DEVICE_HALO] = CORRIDOR

    def commit(self, nodes, net, radius):
        """Claim every node within Chebyshev distance ``radius`` steps of
        ``nodes`` for ``net``, on each node's layer."""
        for (i0, j0, l), (i1, j1, _) in _runs(nodes):
            a0 = max(min(i0, i1) - radius, 0)
            a1 = min(max(i0, i1) + radius, self.nx - 1)
            b0 = max(min(j0, j1) - radius, 0)
            b1 = min(max(j0, j1) + radius, self.ny - 1)
            block = self.owner[l, a0 : a1 + 1, b0 : b1 + 1]
            block[block == 0] = net
            block[(block != net) & (block != 0)] = SHARED

    def passable(self, index, net, escape=False):
        zone = self._zone[index]
        if zone == DEVICE_HALO or (zone == CORRIDOR and not escape):
            return False
        owner = self._owner[index]
        return owner == 0 or owner == net

    @property
    def blocked_count(self):
        """Nodes closed to routing: device halos, corridors and every node
        claimed by a committed wire."""
        return int(np.count_nonzero((self.zone != FREE) | (self.owner != 0)))


def _runs(nodes):
    """Split a node path into maximal straight same-layer runs, as
    ``(first, last)`` node pairs. Isolated nodes give one-node runs."""
    runs = []
    if not nodes:
        return runs
    start = prev = nodes[0]
    direction = None
    for node in nodes[1:]:
        step = (node[0] - prev[0], node[1] - prev[1], node[2] - prev[2])
        if step[2] != 0 or (direction is not None and step != direction):
            runs.append((start, prev))
            start = prev if step[2] == 0 else node
            direction = None if step[2] != 0 else step
        elif direction is None:
            direction = step
        prev = node
    runs.append((start, prev))
    return runs


class RoutePath(object):

    """A routed wire: grid points ``(x, y, layer)`` in µm.

    Consecutive points are one grid step apart on one layer, or share
    ``(x, y)`` on adjacent layers (a via). ``kind`` is ``route`` for
    segments between escape points and ``escape`` for pin escape stubs,
    which also record their ``device``.
    """

    def __init__(
        self,
        net,
        points,
        width,
        kind='route',
        device=None,
        cost=0.0,
        pitch=0.1,
    ):
        self.net = net
        self.points = [tuple(p) for p in points]
        self.width = width
        self.kind = kind
        self.device = device
        self.cost = cost
        for a, b in zip(self.points, self.points[1:]):
            dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
            if a[2] == b[2]:
                ok = abs(dx + dy - pitch) < _TOL and min(dx, dy) < _TOL
            else:
                ok = dx < _TOL and dy < _TOL and _adjacent(a[2], b[2])
            assert ok, 'Bad step %r -> %r in net %s' % (a, b, net)

    def __repr__(self):
        return 'RoutePath(%r, %s, %d points, cost=%g)' % (
            self.net,
            self.kind,
            len(self.points),
            self.cost,
        )

    @property
    def length(self):
        """In-plane length in µm."""
        return sum(
            abs(a[0] - b[0]) + abs(a[1] - b[1])
            for a, b in zip(self.points, self.points[1:])
        )

    @property
    def num_vias(self):
        return sum(
            1 for a, b in zip(self.points, self.points[1:]) if a[2] != b[2]
        )

    def segments(self):
        """Maximal straight runs as ``(layer, x0, y0, x1, y1)``.

        A point between two vias becomes a zero-length segment.
        """
        result = []
        run = [self.points[0]] if self.points else []
        for p in self.points[1:]:
            if p[2] != run[-1][2]:
                result.extend(_straight(run))
                run = [p]
            else:
                run.append(p)
        if run:
            result.extend(_straight(run))
        return result

    def rects(self):
        """``(layer, Rect)`` of each segment drawn at the wire width."""
        half = self.width / 2.0
        return [
            (
                layer,
                Rect(
                    min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)
                ).inflate(half),
            )
            for layer, x0, y0, x1, y1 in self.segments()
        ]


def _adjacent(a, b):
    return abs(LAYERS.index(a) - LAYERS.index(b)) == 1


def _straight(run):
    """Split same-layer points into straight segments."""
    if len(run) == 1:
        x, y, layer = run[0]
        return [(layer, x, y, x, y)]
    segments = []
    start = run[0]
    prev = run[0]
    heading = None
    for p in run[1:]:
        step = (_sign(p[0] - prev[0]), _sign(p[1] - prev[1]))
        if heading is not None and step != heading:
            segments.append((start[2], start[0], start[1], prev[0], prev[1]))
            start = prev
        heading = step
        prev = p
    segments.append((start[2], start[0], start[1], prev[0], prev[1]))
    return segments


def _sign(value):
    if value > _TOL:
        return 1
    if value < -_TOL:
        return -1
    return 0


def build_grid(placement, policy, pitch=0.1, margin_steps=20, extents=None):
    """Build the routing grid of ``placement``.

    Device boxes dilated by ``s_dev`` plus half a wire width block every
    layer, except for corridors of width ``w + s_same`` that run outward
    from each pin through the faces it sits on. A corridor starts at the
    grid node nearest to its pin, even when rounding puts that node inside
    the device. The grid covers the
    placement bounding box plus ``s_dev + s_same`` and ``margin_steps``
    pitches, unless explicit ``(xmin, xmax, ymin, ymax)`` extents are
    given.

    Raises :exc:`EmptyPlacement` for a placement without devices and no
    extents.
    """
    if extents is None:
        if not len(placement):
            raise rfsynth.EmptyPlacement('Cannot size a grid for no devices')
        margin = policy.s_dev + policy.s_same + margin_steps * pitch
        box = placement.bounding_box().inflate(margin)
        extents = (box.x0, box.x1, box.y0, box.y1)
    xmin, xmax, ymin, ymax = extents
    x0 = math.floor(xmin / pitch) * pitch
    y0 = math.floor(ymin / pitch) * pitch
    nx = int(math.ceil((xmax - x0) / pitch - 1e-9)) + 1
    ny = int(math.ceil((ymax - y0) / pitch - 1e-9)) + 1
    grid = RoutingGrid(round(x0, 9), round(y0, 9), nx, ny, pitch)

    w = policy.max_width
    halo = policy.s_dev + w / 2.0
    lane = (w + policy.s_same) / 2.0
    for device_id in placement.ids:
        grid.block_interior(placement.bbox(device_id).inflate(halo))
    for device_id in placement.ids:
        box = placement.bbox(device_id)
        outer = box.inflate(halo)
        for pin in placement.device(device_id).pins:
            x, y = placement.pin_position(device_id, pin.name)
            # the corridor starts at the node the pin snaps to
            sx, sy = grid.snap(x, y)
            xs = (min(x, sx), max(x, sx))
            ys = (min(y, sy), max(y, sy))
            for d in escape_faces(x, y, box):
                ux, uy = DIRECTIONS[d]
                if ux:
                    end = outer.x1 if ux > 0 else outer.x0
                    rect = Rect(
                        min(xs[0], end),
                        ys[0] - lane,
                        max(xs[1], end),
                        ys[1] + lane,
                    )
                else:
                    end = outer.y1 if uy > 0 else outer.y0
                    rect = Rect(
                        xs[0] - lane,
                        min(ys[0], end),
                        xs[1] + lane,
                        max(ys[1], end),
                    )
                grid.open_corridor(rect)
    logger.debug(
        '%r: %d blocked nodes', grid, int(np.count_nonzero(grid.zone))
    )
    return grid


def mst(points):
    """Minimum spanning tree under the Manhattan metric.

    Returns ``(i, j)`` index pairs with ``i < j``. Equal-length edges are
    taken in lexicographic order of their endpoint coordinates.
    """
    points = [tuple(p) for p in points]
    candidates = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = points[i], points[j]
            length = sum(abs(u - v) for u, v in zip(a[:2], b[:2]))
            candidates.append((length, min(a, b), max(a, b), i, j))
    candidates.sort()
    forest = UnionFind(range(len(points)))
    edges = []
    for _, _, _, i, j in candidates:
        if forest[i] != forest[j]:
            forest.union(i, j)
            edges.append((i, j))
            if len(edges) == len(points) - 1:
                break
    return edges


def astar_route(
    grid,
    s,
    t,
    policy=None,
    net=0,
    width=None,
    max_expansions=5000000,
):
    """Shortest path from node ``s`` to node ``t`` for ``net``.

    In-plane steps cost one pitch. A via to an adjacent layer costs ten
    times the path cost accumulated so far, or ``policy.via_penalty`` µm in
    fixed via mode. The heuristic is the Manhattan distance to ``t``. Equal
    estimates pop the deeper node first, then in insertion order; neighbours
    are tried right, left, up, down, then the vias in ascending layer
    order.

    Returns a :class:`RoutePath` whose ``cost`` is in µm. Raises
    :exc:`Unroutable` when the open set is exhausted.
    """
    fixed = policy is not None and policy.via_mode == 'fixed'
    via_units = grid.units(policy.via_penalty) if fixed else 0
    if width is None:
        width = policy.widths[LAYERS[s[2]]] if policy else 0.5

    s_idx, t_idx = grid.index(s), grid.index(t)
    for node in (s, t):
        if not grid.inside(node) or not grid.passable(grid.index(node), net):
            raise rfsynth.Unroutable('Endpoint %r is blocked' % (node,))
    if s_idx == t_idx:
        return RoutePath(net, [grid.point(s)], width, pitch=grid.pitch)

    nx, ny = grid.nx, grid.ny
    plane = nx * ny
    ti, tj, _ = t
    zone, owner = grid._zone, grid._owner
    g_cost = {s_idx: 0}
    parent = {}
    counter = 0
    heap = [(abs(s[0] - ti) + abs(s[1] - tj), 0, counter, s_idx)]
    expansions = 0

    while heap:
        _, neg_g, _, idx = heapq.heappop(heap)
        g = -neg_g
        if g > g_cost[idx]:
            continue
        if idx == t_idx:
            break
        expansions += 1
        if expansions > max_expansions:
            raise rfsynth.Unroutable(
                'Search limit of %d nodes' % max_expansions
            )
        l, rest = divmod(idx, plane)
        i, j = divmod(rest, ny)

        moves = []
        if i + 1 < nx:
            moves.append((idx + ny, i + 1, j, g + 1))
        if i > 0:
            moves.append((idx - ny, i - 1, j, g + 1))
        if j + 1 < ny:
            moves.append((idx + 1, i, j + 1, g + 1))
        if j > 0:
            moves.append((idx - 1, i, j - 1, g + 1))
        via_g = g + via_units if fixed else g + VIA_FACTOR * g
        if l > 0:
            moves.append((idx - plane, i, j, via_g))
        if l < 2:
            moves.append((idx + plane, i, j, via_g))

        for n_idx, ni, nj, n_g in moves:
            if zone[n_idx] != FREE:
                continue
            o = owner[n_idx]
            if o != 0 and o != net:
                continue
            if n_g < g_cost.get(n_idx, n_g + 1):
                g_cost[n_idx] = n_g
                parent[n_idx] = idx
                counter += 1
                heapq.heappush(
                    heap,
                    (n_g + abs(ni - ti) + abs(nj - tj), -n_g, counter, n_idx),
                )
    else:
        raise rfsynth.Unroutable(
            'No path from %r to %r' % (grid.point(s), grid.point(t))
        )

    chain = [t_idx]
    while chain[-1] != s_idx:
        chain.append(parent[chain[-1]])
    nodes = [grid.node(k) for k in reversed(chain)]
    logger.debug(
        'A* %r -> %r: cost %d units, %d expansions',
        s,
        t,
        g_cost[t_idx],
        expansions,
    )
    return RoutePath(
        net,
        [grid.point(n) for n in nodes],
        width,
        cost=round(g_cost[t_idx] * grid.pitch, 9),
        pitch=grid.pitch,
    )


def _walk(grid, node, step, count, net):
    """Nodes visited taking ``count`` steps of ``step`` from ``node``, or
    :class:`None` if one is off the grid or closed to escapes."""
    i, j, l = node
    nodes = []
    for _ in range(count):
        i, j = i + step[0], j + step[1]
        n = (i, j, l)
        if not grid.inside(n) or not grid.passable(grid.index(n), net, True):
            return None
        nodes.append(n)
    return nodes


def _exit_run(grid, node, step, net):
    """Walk from ``node`` along ``step`` until the first free node.

    Returns the nodes walked, ending on the free node, or :class:`None`.
    The length of the clear run beyond the halo is returned as well.
    """
    i, j, l = node
    nodes = []
    exit_at = None
    free_run = 0
    if grid.zone[l, i, j] == FREE:
        exit_at = 0
    while True:
        i, j = i + step[0], j + step[1]
        n = (i, j, l)
        if not grid.inside(n) or not grid.passable(grid.index(n), net, True):
            break
        nodes.append(n)
        if exit_at is None and grid.zone[l, i, j] == FREE:
            exit_at = len(nodes)
        if exit_at is not None:
            free_run += 1
    if exit_at is None:
        return None, 0
    return nodes[:exit_at], free_run


def pin_escape(
    grid, x, y, device_box, policy, net=0, device=None, max_dogleg=50
):
    """Escape the pin at ``(x, y)`` from its device halo.

    Phase one walks straight out through one of the faces the pin sits on,
    choosing the direction with the longest clear run. If no straight walk
    reaches a free node, phase two tries doglegs: a sideways walk of up to
    ``max_dogleg`` steps followed by the straight walk. Doglegs only help
    when wires are already committed near the pin. :func:`route_all` escapes
    every pin before committing anything, so only direct callers reach that
    phase.

    Returns ``(stub, escape_node)``. Raises :exc:`EscapeFailure` when both
    phases fail.
    """
    start = grid.node_of(x, y, 0)
    width = policy.widths[LAYERS[0]]
    if not grid.passable(grid.index(start), net, escape=True):
        raise rfsynth.EscapeFailure('Pin at (%g, %g) is blocked' % (x, y))
    faces = escape_faces(x, y, device_box)

    best = None
    for d in faces:
        nodes, free_run = _exit_run(grid, start, DIRECTIONS[d], net)
        if nodes is not None and (best is None or free_run > best[1]):
            best = (nodes, free_run)
    path = None
    if best is not None:
        path = [start] + best[0]
    else:
        for k in range(1, max_dogleg + 1):
            for d in faces:
                ux, uy = DIRECTIONS[d]
                for side in ((uy, ux), (-uy, -ux)):
                    leg = _walk(grid, start, side, k, net)
                    if leg is None:
                        continue
                    nodes, _ = _exit_run(grid, leg[-1], (ux, uy), net)
                    if nodes is not None:
                        path = [start] + leg + nodes
                        break
                if path:
                    break
            if path:
                break
        if path is None:
            raise rfsynth.EscapeFailure(
                'Pin at (%g, %g) of %s cannot escape' % (x, y, device)
            )
    stub = RoutePath(
        net,
        [grid.point(n) for n in path],
        width,
        kind='escape',
        device=device,
        cost=round((len(path) - 1) * grid.pitch, 9),
        pitch=grid.pitch,
    )
    return stub, path[-1]


def _halo_radius(grid, policy):
    return grid.units(policy.s_same + policy.max_width)


def _path_nodes(grid, path):
    return [
        grid.node_of(x, y, LAYERS.index(layer)) for x, y, layer in path.points
    ]


def route_net(
    name, escape_nodes, grid, policy, net=0, max_expansions=5000000
):
    """Route one net between its pins' escape nodes.

    Every edge of the Manhattan MST of the escape nodes is routed with
    :func:`astar_route` and committed to the grid at once, so later
    segments and nets keep their distance from it.

    Raises :exc:`Unroutable` naming the net and edge.
    """
    nodes = list(escape_nodes)
    paths = []
    radius = _halo_radius(grid, policy)
    for a, b in mst(nodes):
        try:
            path = astar_route(
                grid,
                nodes[a],
                nodes[b],
                policy,
                net=net,
                max_expansions=max_expansions,
            )
        except rfsynth.Unroutable as exc:
            edge = (grid.point(nodes[a]), grid.point(nodes[b]))
            raise rfsynth.Unroutable('%s' % exc, net=name, edge=edge)
        path.net = name
        grid.commit(_path_nodes(grid, path), net, radius)
        paths.append(path)
    return paths


class RoutedDesign(object):

    """The result of :func:`route_all`.

    ``paths`` are the routed segments, ``escapes`` the pin escape stubs,
    ``violations`` the :func:`check_spacing` report and ``unrouted`` maps
    each net that could not be completed to the reason.
    """

    def __init__(self, paths=None, escapes=None, grid=None):
        self.paths = list(paths or [])
        self.escapes = list(escapes or [])
        self.violations = []
        self.unrouted = collections.OrderedDict()
        self.grid = grid

    def __repr__(self):
        return (
            'RoutedDesign(%d paths, %d escapes, %d violations, %d unrouted)'
        ) % (
            len(self.paths),
            len(self.escapes),
            len(self.violations),
            len(self.unrouted),
        )

    @property
    def wires(self):
        return self.escapes + self.paths

    @property
    def wirelength(self):
        return sum(p.length for p in self.wires)

    @property
    def num_vias(self):
        return sum(p.num_vias for p in self.wires)

    @property
    def clean(self):
        return not self.violations and not self.unrouted

    def write_csv(self, fh):
        """Write one ``net,kind,layer,x0,y0,x1,y1,width`` row per segment."""
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(
            ['net', 'kind', 'layer', 'x0', 'y0', 'x1', 'y1', 'width']
        )
        for path in self.wires:
            for layer, x0, y0, x1, y1 in path.segments():
                writer.writerow(
                    [
                        path.net,
                        path.kind,
                        layer,
                        '%.3f' % x0,
                        '%.3f' % y0,
                        '%.3f' % x1,
                        '%.3f' % y1,
                        '%.3f' % path.width,
                    ]
                )


def _net_order(nets):
    return sorted(nets, key=lambda n: (-n.weight, -len(n.pins), n.name))


def route_all(
    netlist,
    placement,
    policy,
    pitch=0.1,
    margin_steps=20,
    max_dogleg=50,
    max_expansions=5000000,
):
    """Route every net of ``netlist`` over ``placement``.

    All pins are escaped first. Nets are then routed by descending weight,
    then descending pin count, then name, each committed net becoming an
    obstacle for the nets after it. A net that cannot be completed is
    recorded in :attr:`RoutedDesign.unrouted` and routing continues.
    """
    nets = [
        n
        for n in netlist.nets
        if len([p for p in n.pins if p[0] in placement]) >= 2
    ]
    if not nets:
        design = RoutedDesign()
        design.violations = check_spacing(design, placement, policy)
        return design

    grid = build_grid(
        placement, policy, pitch=pitch, margin_steps=margin_steps
    )
    design = RoutedDesign(grid=grid)
    radius = _halo_radius(grid, policy)
    ordered = _net_order(nets)
    escape_nodes = collections.OrderedDict()

    for number, net in enumerate(ordered, 1):
        nodes = []
        stubs = []
        try:
            for component_id, terminal in net.pins:
                if component_id not in placement:
                    continue
                x, y = placement.pin_position(component_id, terminal)
                stub, node = pin_escape(
                    grid,
                    x,
                    y,
                    placement.bbox(component_id),
                    policy,
                    net=number,
                    device=component_id,
                    max_dogleg=max_dogleg,
                )
                stub.net = net.name
                stubs.append(stub)
                nodes.append(node)
        except rfsynth.Error as exc:
            logger.warning('Net %s: %s', net.name, exc)
            design.unrouted[net.name] = '%s' % exc
            continue
        design.escapes.extend(stubs)
        escape_nodes[net.name] = (number, nodes)
    for stub in design.escapes:
        number = escape_nodes[stub.net][0]
        grid.commit(_path_nodes(grid, stub), number, radius)

    for name, (number, nodes) in escape_nodes.items():
        try:
            paths = route_net(
                name,
                nodes,
                grid,
                policy,
                net=number,
                max_expansions=max_expansions,
            )
        except rfsynth.Unroutable as exc:
            logger.warning('Unroutable: %s', exc)
            design.unrouted[name] = '%s' % exc
            continue
        design.paths.extend(paths)
        logger.debug('Routed net %s in %d segments', name, len(paths))

    design.violations = check_spacing(design, placement, policy)
    logger.info(
        'Routed %d nets, %d unrouted, %d spacing violations',
        len([n for n in escape_nodes if n not in design.unrouted]),
        len(design.unrouted),
        len(design.violations),
    )
    return design


def check_spacing(design, placement, policy):
    """Audit wire clearances with exact rectangle distances.

    Reports every wire segment closer than ``s_dev`` to a device, except an
    escape stub against its own device, and every pair of segments of
    different nets on one layer closer than ``s_same``.
    """
    violations = []
    rects = []
    for path in design.wires:
        for layer, rect in path.rects():
            rects.append((path, layer, rect))

    for path, layer, rect in rects:
        for device_id in placement.ids:
            if path.kind == 'escape' and path.device == device_id:
                continue
            gap = rect_distance(rect, placement.bbox(device_id))
            if gap < policy.s_dev - _TOL:
                violations.append(
                    Violation(
                        'error',
                        0,
                        ViolationType.DEVICE_CLEARANCE,
                        'net %s on %s is %.3f um from device %s (min %.3f)'
                        % (path.net, layer, gap, device_id, policy.s_dev),
                    )
                )

    for a in range(len(rects)):
        path_a, layer_a, rect_a = rects[a]
        for b in range(a + 1, len(rects)):
            path_b, layer_b, rect_b = rects[b]
            if layer_a != layer_b or path_a.net == path_b.net:
                continue
            gap = rect_distance(rect_a, rect_b)
            if gap < policy.s_same - _TOL:
                violations.append(
                    Violation(
                        'error',
                        0,
                        ViolationType.NET_CLEARANCE,
                        'nets %s and %s on %s are %.3f um apart (min %.3f)'
                        % (
                            path_a.net,
                            path_b.net,
                            layer_a,
                            gap,
                            policy.s_same,
                        ),
                    )
                )
    return violations
