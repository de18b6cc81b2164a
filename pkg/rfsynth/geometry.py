from __future__ import unicode_literals

import collections
import math


__all__ = [
    'Cell',
    'DIRECTIONS',
    'Pin',
    'ROTATIONS',
    'Rect',
    'escape_faces',
    'Shape',
    'rect_distance',
    'rotate_point',
    'rotate_rect',
    'rotated_size',
    'transistor_box',
]


ROTATIONS = (0, 90, 180, 270)
"""The four allowed device rotations in degrees, counter-clockwise."""

DIRECTIONS = collections.OrderedDict(
    [('R', (1, 0)), ('L', (-1, 0)), ('U', (0, 1)), ('D', (0, -1))]
)
"""Escape directions and their unit vectors, in tie-break order."""


class Rect(collections.namedtuple('Rect', ['x0', 'y0', 'x1', 'y1'])):

    """An axis-aligned rectangle in µm with ``x0 <= x1`` and ``y0 <= y1``."""

    __slots__ = ()

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    def translate(self, dx, dy):
        return Rect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def inflate(self, margin):
        return Rect(
            self.x0 - margin,
            self.y0 - margin,
            self.x1 + margin,
            self.y1 + margin,
        )

    def overlap(self, other):
        """Area shared with ``other``; zero for boxes touching on an edge."""
        dx = min(self.x1, other.x1) - max(self.x0, other.x0)
        dy = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(0.0, dx) * max(0.0, dy)

    def union(self, other):
        return Rect(
            min(self.x0, other.x0),
            min(self.y0, other.y0),
            max(self.x1, other.x1),
            max(self.y1, other.y1),
        )

    def contains(self, x, y, tol=0.0):
        return (
            self.x0 - tol <= x <= self.x1 + tol
            and self.y0 - tol <= y <= self.y1 + tol
        )

    def points(self):
        """The closed boundary point list, counter-clockwise."""
        return [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
            (self.x0, self.y0),
        ]

    @classmethod
    def bounding(cls, rects):
        rects = list(rects)
        if not rects:
            return None
        result = rects[0]
        for rect in rects[1:]:
            result = result.union(rect)
        return result


def rect_distance(a, b):
    """Euclidean clearance between two rectangles, zero if they touch or
    overlap."""
    dx = max(0.0, b.x0 - a.x1, a.x0 - b.x1)
    dy = max(0.0, b.y0 - a.y1, a.y0 - b.y1)
    return math.hypot(dx, dy)


Shape = collections.namedtuple('Shape', ['layer', 'rect', 'terminal'])
"""A drawn rectangle on a logical layer, optionally tagged with the device
terminal it belongs to."""


Pin = collections.namedtuple('Pin', ['name', 'x', 'y', 'layer'])
"""A device pin at ``(x, y)`` relative to the cell origin."""


class Cell(object):

    """Generated layout of one component design.

    Cells are positioned with their lower-left bounding box corner at the
    origin. ``name`` identifies the design: two components with equal cell
    names share one GDSII structure.
    """

    def __init__(self, name, kind, width, height, shapes=None, pins=None):
        assert width > 0 and height > 0, (
            'Cell %s must have a positive size, got %r x %r'
            % (name, width, height)
        )
        self.name = name
        self.kind = kind
        self.width = width
        self.height = height
        self.shapes = list(shapes or [])
        self.pins = list(pins or [])

    def __repr__(self):
        return 'Cell(%r, %r, %.3f x %.3f)' % (
            self.name,
            self.kind,
            self.width,
            self.height,
        )

    @property
    def bbox(self):
        return Rect(0.0, 0.0, self.width, self.height)

    def pin(self, name):
        for pin in self.pins:
            if pin.name == name:
                return pin
        raise KeyError(name)


def rotated_size(width, height, theta):
    """Bounding box size after rotating by ``theta`` degrees."""
    if theta in (90, 270):
        return height, width
    return width, height


def rotate_point(x, y, theta, width, height):
    """Map a point of a ``width`` x ``height`` cell into the frame of the
    same cell rotated by ``theta`` degrees counter-clockwise, with the
    rotated bounding box again starting at the origin.
    """
    if theta == 0:
        return x, y
    elif theta == 90:
        return height - y, x
    elif theta == 180:
        return width - x, height - y
    elif theta == 270:
        return y, width - x
    raise ValueError('Rotation must be one of %r, got %r' % (ROTATIONS, theta))


def rotate_rect(rect, theta, width, height):
    xa, ya = rotate_point(rect.x0, rect.y0, theta, width, height)
    xb, yb = rotate_point(rect.x1, rect.y1, theta, width, height)
    return Rect(min(xa, xb), min(ya, yb), max(xa, xb), max(ya, yb))


def transistor_box(size, pin_layer='M1'):
    """NMOS device as a simplified three-pin box.

    The gate pin sits in the middle of the left edge, drain on the top edge
    and source on the bottom edge, so source/drain escape vertically at
    rotation 0.
    """
    half = size / 2.0
    return Cell(
        'NMOS_%s' % _size_token(size),
        'nmos',
        size,
        size,
        pins=[
            Pin('G', 0.0, half, pin_layer),
            Pin('D', half, size, pin_layer),
            Pin('S', half, 0.0, pin_layer),
        ],
    )


def _size_token(value):
    return ('%.2f' % value).replace('.', 'p')


def escape_faces(x, y, rect, tol=1e-6):
    """Directions a pin at ``(x, y)`` may escape ``rect`` through.

    A pin on the boundary escapes only through the faces it sits on, an
    interior pin in every direction.
    """
    faces = []
    if abs(x - rect.x1) <= tol:
        faces.append('R')
    if abs(x - rect.x0) <= tol:
        faces.append('L')
    if abs(y - rect.y1) <= tol:
        faces.append('U')
    if abs(y - rect.y0) <= tol:
        faces.append('D')
    return faces or list(DIRECTIONS)
