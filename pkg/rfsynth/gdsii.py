from __future__ import unicode_literals

import collections
import datetime
import io
import logging
import math
import re
import struct

import rfsynth
from rfsynth.geometry import Rect


__all__ = [
    'Boundary',
    'FlatElement',
    'GdsLibrary',
    'GdsPath',
    'GdsStructure',
    'SRef',
    'assemble_design',
    'cell_structure',
    'decode_real8',
    'encode_real8',
    'flatten',
    'load_gds',
    'read_gds',
    'save_gds',
    'write_gds',
]

logger = logging.getLogger(__name__)


EPOCH = datetime.datetime(1970, 1, 1)

MAX_NAME = 32
INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1

PIN_MARK = 0.25
"""Half the side of the square drawn on the PIN layer at each pin, µm."""

_NAME_RE = re.compile(r'^[A-Za-z0-9_?$]+$')


class RecordType(object):
    HEADER = 0x00
    BGNLIB = 0x01
    LIBNAME = 0x02
    UNITS = 0x03
    ENDLIB = 0x04
    BGNSTR = 0x05
    STRNAME = 0x06
    ENDSTR = 0x07
    BOUNDARY = 0x08
    PATH = 0x09
    SREF = 0x0A
    LAYER = 0x0D
    DATATYPE = 0x0E
    WIDTH = 0x0F
    XY = 0x10
    ENDEL = 0x11
    SNAME = 0x12
    STRANS = 0x1A
    ANGLE = 0x1C


class DataType(object):
    NONE = 0x00
    BITARRAY = 0x01
    INT2 = 0x02
    INT4 = 0x03
    REAL8 = 0x05
    ASCII = 0x06


_DATA_TYPES = {
    RecordType.HEADER: DataType.INT2,
    RecordType.BGNLIB: DataType.INT2,
    RecordType.LIBNAME: DataType.ASCII,
    RecordType.UNITS: DataType.REAL8,
    RecordType.ENDLIB: DataType.NONE,
    RecordType.BGNSTR: DataType.INT2,
    RecordType.STRNAME: DataType.ASCII,
    RecordType.ENDSTR: DataType.NONE,
    RecordType.BOUNDARY: DataType.NONE,
    RecordType.PATH: DataType.NONE,
    RecordType.SREF: DataType.NONE,
    RecordType.LAYER: DataType.INT2,
    RecordType.DATATYPE: DataType.INT2,
    RecordType.WIDTH: DataType.INT4,
    RecordType.XY: DataType.INT4,
    RecordType.ENDEL: DataType.NONE,
    RecordType.SNAME: DataType.ASCII,
    RecordType.STRANS: DataType.BITARRAY,
    RecordType.ANGLE: DataType.REAL8,
}


def encode_real8(value):
    """Encode ``value`` in the GDSII 8-byte real format.

    The format is a sign bit, a 7-bit excess-64 base-16 exponent and a
    56-bit mantissa ``m`` with ``1/16 <= m < 1``. Every IEEE double whose
    exponent fits is encoded exactly.

    Raises :exc:`RangeError` for non-finite values and magnitudes outside
    ``[16**-65, 16**63)``.
    """
    if not math.isfinite(value):
        raise rfsynth.RangeError('Cannot encode %r' % value)
    if value == 0:
        return b'\x00' * 8
    sign = 0x80 if value < 0 else 0x00
    value = abs(value)
    _, exp2 = math.frexp(value)
    exponent = -((-exp2) // 4)
    mantissa = int(round(math.ldexp(value, 4 * (14 - exponent))))
    if mantissa >= 1 << 56:
        mantissa >>= 4
        exponent += 1
    if not -64 <= exponent <= 63:
        raise rfsynth.RangeError(
            '%r is outside the GDSII real range' % value
        )
    return struct.pack(
        '>BBHI',
        sign | (exponent + 64),
        mantissa >> 48,
        (mantissa >> 32) & 0xFFFF,
        mantissa & 0xFFFFFFFF,
    )


def decode_real8(data):
    """Decode an 8-byte GDSII real."""
    head, byte2, short3, long4 = struct.unpack('>BBHI', data)
    mantissa = (byte2 << 48) | (short3 << 32) | long4
    value = math.ldexp(mantissa, 4 * ((head & 0x7F) - 64) - 56)
    return -value if head & 0x80 else value


class Boundary(
    collections.namedtuple('Boundary', ['layer', 'datatype', 'points'])
):

    """A closed polygon. Points are integer database units; the first
    point is repeated at the end."""

    __slots__ = ()

    def __new__(cls, layer, datatype, points):
        points = tuple(tuple(int(c) for c in p) for p in points)
        if points and points[0] != points[-1]:
            points = points + (points[0],)
        assert len(points) >= 4, 'A boundary needs at least 4 points'
        return super(Boundary, cls).__new__(cls, layer, datatype, points)


class GdsPath(
    collections.namedtuple(
        'GdsPath', ['layer', 'datatype', 'width', 'points']
    )
):

    """A wire with flush ends (path type 0)."""

    __slots__ = ()

    def __new__(cls, layer, datatype, width, points):
        points = tuple(tuple(int(c) for c in p) for p in points)
        assert len(points) >= 2, 'A path needs at least 2 points'
        return super(GdsPath, cls).__new__(
            cls, layer, datatype, int(width), points
        )


class SRef(collections.namedtuple('SRef', ['name', 'origin', 'rotation'])):

    """A placement of structure ``name`` rotated counter-clockwise by
    ``rotation`` degrees about its origin, then moved to ``origin``."""

    __slots__ = ()

    def __new__(cls, name, origin, rotation=0):
        assert rotation in (0, 90, 180, 270), 'Bad rotation %r' % rotation
        origin = (int(origin[0]), int(origin[1]))
        return super(SRef, cls).__new__(cls, name, origin, rotation)


class GdsStructure(object):

    """A named structure holding boundaries, paths and references."""

    def __init__(self, name, elements=None):
        self.name = name
        self.elements = list(elements or [])

    def __repr__(self):
        return 'GdsStructure(%r, %d elements)' % (
            self.name,
            len(self.elements),
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (self.name, self.elements) == (other.name, other.elements)
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    @property
    def references(self):
        return [e for e in self.elements if isinstance(e, SRef)]


class GdsLibrary(object):

    """A GDSII library.

    Coordinates are stored in database units, ``db_unit`` meters each;
    ``user_unit`` is the meters per user unit recorded in the stream.
    ``timestamp`` is written as both modification and access time, the
    Unix epoch when :class:`None`.
    """

    def __init__(
        self,
        name='RFSYNTH',
        structures=None,
        user_unit=1e-6,
        db_unit=1e-9,
        timestamp=None,
    ):
        assert db_unit < user_unit, 'db_unit must be below user_unit'
        self.name = name
        self.structures = list(structures or [])
        self.user_unit = user_unit
        self.db_unit = db_unit
        self.timestamp = timestamp

    def __repr__(self):
        return 'GdsLibrary(%r, %d structures)' % (
            self.name,
            len(self.structures),
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self._key() == other._key()
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def _key(self):
        return (
            self.name,
            self.structures,
            self.user_unit,
            self.db_unit,
            self.timestamp,
        )

    @property
    def scale(self):
        """Database units per user unit."""
        return int(round(self.user_unit / self.db_unit))

    def structure(self, name):
        for structure in self.structures:
            if structure.name == name:
                return structure
        raise KeyError(name)

    def add(self, structure):
        assert all(s.name != structure.name for s in self.structures), (
            'Duplicate structure %s' % structure.name
        )
        self.structures.append(structure)
        return structure

    def top_structures(self):
        """Structures not referenced by any other structure."""
        referenced = set(
            r.name for s in self.structures for r in s.references
        )
        return [s for s in self.structures if s.name not in referenced]

    def to_db(self, value):
        """Convert user units to integer database units."""
        return int(round(value * self.scale))


def _check_name(name):
    if len(name) > MAX_NAME:
        raise rfsynth.NameTooLong(
            'Name %r is %d characters long, the limit is %d'
            % (name, len(name), MAX_NAME)
        )
    assert _NAME_RE.match(name), (
        'Name %r has characters outside A-Z a-z 0-9 _ ? $' % name
    )


def _record(record_type, data_type, payload=b''):
    header = struct.pack('>HBB', 4 + len(payload), record_type, data_type)
    return header + payload


def _int2(record_type, *values):
    return _record(
        record_type, DataType.INT2, struct.pack('>%dh' % len(values), *values)
    )


def _int4(record_type, values):
    for value in values:
        if not INT32_MIN <= value <= INT32_MAX:
            raise rfsynth.CoordinateOverflow(
                '%d does not fit a 32-bit signed integer' % value
            )
    return _record(
        record_type, DataType.INT4, struct.pack('>%di' % len(values), *values)
    )


def _ascii(record_type, text):
    data = text.encode('ascii')
    if len(data) % 2:
        data += b'\x00'
    return _record(record_type, DataType.ASCII, data)


def _empty(record_type):
    return _record(record_type, DataType.NONE)


def _xy(points):
    return _int4(RecordType.XY, [c for p in points for c in p])


def _stamp(timestamp):
    t = timestamp or EPOCH
    fields = (t.year, t.month, t.day, t.hour, t.minute, t.second)
    return fields + fields


def write_gds(lib, fh=None):
    """Serialize ``lib`` as a GDSII stream.

    Returns the bytes, and also writes them to ``fh`` when given. The output
    is a pure function of the library.

    Raises :exc:`NameTooLong` and :exc:`CoordinateOverflow`.
    """
    _check_name(lib.name)
    chunks = [
        _int2(RecordType.HEADER, 600),
        _int2(RecordType.BGNLIB, *_stamp(lib.timestamp)),
        _ascii(RecordType.LIBNAME, lib.name),
        _record(
            RecordType.UNITS,
            DataType.REAL8,
            encode_real8(lib.db_unit / lib.user_unit)
            + encode_real8(lib.db_unit),
        ),
    ]
    for structure in lib.structures:
        _check_name(structure.name)
        chunks.append(_int2(RecordType.BGNSTR, *_stamp(lib.timestamp)))
        chunks.append(_ascii(RecordType.STRNAME, structure.name))
        for element in structure.elements:
            chunks.extend(_element_records(element))
        chunks.append(_empty(RecordType.ENDSTR))
    chunks.append(_empty(RecordType.ENDLIB))
    data = b''.join(chunks)
    if fh is not None:
        fh.write(data)
    return data


def _element_records(element):
    if isinstance(element, Boundary):
        return [
            _empty(RecordType.BOUNDARY),
            _int2(RecordType.LAYER, element.layer),
            _int2(RecordType.DATATYPE, element.datatype),
            _xy(element.points),
            _empty(RecordType.ENDEL),
        ]
    elif isinstance(element, GdsPath):
        return [
            _empty(RecordType.PATH),
            _int2(RecordType.LAYER, element.layer),
            _int2(RecordType.DATATYPE, element.datatype),
            _int4(RecordType.WIDTH, [element.width]),
            _xy(element.points),
            _empty(RecordType.ENDEL),
        ]
    elif isinstance(element, SRef):
        _check_name(element.name)
        records = [
            _empty(RecordType.SREF),
            _ascii(RecordType.SNAME, element.name),
        ]
        if element.rotation:
            records.append(
                _record(RecordType.STRANS, DataType.BITARRAY, b'\x00\x00')
            )
            records.append(
                _record(
                    RecordType.ANGLE,
                    DataType.REAL8,
                    encode_real8(float(element.rotation)),
                )
            )
        records.append(_xy([element.origin]))
        records.append(_empty(RecordType.ENDEL))
        return records
    raise TypeError('Unknown GDSII element %r' % (element,))


def save_gds(lib, filename):
    with open(filename, 'wb') as fh:
        write_gds(lib, fh)
    logger.info('Wrote %s (%d structures)', filename, len(lib.structures))


def _records(data):
    """Yield ``(offset, record_type, data_type, payload)`` for each record."""
    offset = 0
    while offset < len(data):
        if len(data) - offset < 4:
            raise rfsynth.MalformedRecord(offset, 'truncated record header')
        length, record_type, data_type = struct.unpack_from(
            '>HBB', data, offset
        )
        if length < 4 or length % 2:
            raise rfsynth.MalformedRecord(
                offset, 'bad record length %d' % length
            )
        if offset + length > len(data):
            raise rfsynth.MalformedRecord(offset, 'truncated record')
        if record_type not in _DATA_TYPES:
            raise rfsynth.UnsupportedRecord(record_type, offset)
        if _DATA_TYPES[record_type] != data_type:
            raise rfsynth.MalformedRecord(
                offset,
                'data type 0x%02x for record 0x%02x' % (data_type, record_type),
            )
        yield offset, record_type, data[offset + 4 : offset + length]
        offset += length


def _unpack(offset, fmt, size, payload):
    if len(payload) % size:
        raise rfsynth.MalformedRecord(offset, 'payload size %d' % len(payload))
    return struct.unpack('>%d%s' % (len(payload) // size, fmt), payload)


class _Reader(object):

    def __init__(self, data):
        self.records = _records(bytes(data))
        self.size = len(data)
        self.offset = 0

    def next(self, *expected):
        try:
            self.offset, record_type, payload = next(self.records)
        except StopIteration:
            raise rfsynth.MalformedRecord(self.size, 'unexpected end of stream')
        if expected and record_type not in expected:
            raise rfsynth.MalformedRecord(
                self.offset, 'unexpected record 0x%02x' % record_type
            )
        return record_type, payload

    def int2(self, payload):
        return _unpack(self.offset, 'h', 2, payload)

    def int4(self, payload):
        return _unpack(self.offset, 'i', 4, payload)

    def real8(self, payload):
        if len(payload) % 8:
            raise rfsynth.MalformedRecord(self.offset, 'bad real payload')
        return [
            decode_real8(payload[i : i + 8])
            for i in range(0, len(payload), 8)
        ]

    def text(self, payload):
        return payload.rstrip(b'\x00').decode('ascii')

    def points(self, payload):
        values = self.int4(payload)
        if len(values) % 2:
            raise rfsynth.MalformedRecord(
                self.offset, 'odd XY coordinate count'
            )
        return list(zip(values[0::2], values[1::2]))


def read_gds(data):
    """Parse a GDSII stream written by :func:`write_gds`.

    Raises :exc:`MalformedRecord` with the offset of the offending record,
    or :exc:`UnsupportedRecord` for record types outside the subset the
    writer emits.
    """
    reader = _Reader(data)
    _, payload = reader.next(RecordType.HEADER)
    _, payload = reader.next(RecordType.BGNLIB)
    timestamp = _timestamp(reader, reader.int2(payload))
    _, payload = reader.next(RecordType.LIBNAME)
    name = reader.text(payload)
    _, payload = reader.next(RecordType.UNITS)
    units = reader.real8(payload)
    if len(units) != 2 or units[0] <= 0:
        raise rfsynth.MalformedRecord(reader.offset, 'bad UNITS record')
    db_unit = units[1]
    user_unit = float('%.12g' % (units[1] / units[0]))
    lib = GdsLibrary(name, [], user_unit, db_unit, timestamp)

    while True:
        record_type, payload = reader.next(RecordType.BGNSTR, RecordType.ENDLIB)
        if record_type == RecordType.ENDLIB:
            break
        _, payload = reader.next(RecordType.STRNAME)
        structure = GdsStructure(reader.text(payload))
        while True:
            record_type, payload = reader.next(
                RecordType.BOUNDARY,
                RecordType.PATH,
                RecordType.SREF,
                RecordType.ENDSTR,
            )
            if record_type == RecordType.ENDSTR:
                break
            structure.elements.append(_read_element(reader, record_type))
        lib.structures.append(structure)
    return lib


def _timestamp(reader, fields):
    if len(fields) != 12:
        raise rfsynth.MalformedRecord(reader.offset, 'bad timestamp')
    try:
        stamp = datetime.datetime(*fields[:6])
    except ValueError:
        raise rfsynth.MalformedRecord(reader.offset, 'bad timestamp')
    return None if stamp == EPOCH else stamp


def _read_element(reader, kind):
    if kind == RecordType.SREF:
        _, payload = reader.next(RecordType.SNAME)
        name = reader.text(payload)
        rotation = 0
        record_type, payload = reader.next(RecordType.STRANS, RecordType.XY)
        if record_type == RecordType.STRANS:
            if payload != b'\x00\x00':
                raise rfsynth.MalformedRecord(
                    reader.offset, 'unsupported STRANS flags'
                )
            _, payload = reader.next(RecordType.ANGLE)
            angle = reader.real8(payload)[0]
            rotation = int(round(angle)) % 360
            if rotation not in (0, 90, 180, 270) or rotation != angle:
                raise rfsynth.MalformedRecord(reader.offset, 'angle %r' % angle)
            _, payload = reader.next(RecordType.XY)
        points = reader.points(payload)
        reader.next(RecordType.ENDEL)
        if len(points) != 1:
            raise rfsynth.MalformedRecord(reader.offset, 'SREF needs one point')
        return SRef(name, points[0], rotation)

    _, payload = reader.next(RecordType.LAYER)
    layer = reader.int2(payload)[0]
    _, payload = reader.next(RecordType.DATATYPE)
    datatype = reader.int2(payload)[0]
    width = None
    if kind == RecordType.PATH:
        _, payload = reader.next(RecordType.WIDTH)
        width = reader.int4(payload)[0]
    _, payload = reader.next(RecordType.XY)
    points = reader.points(payload)
    reader.next(RecordType.ENDEL)
    if kind == RecordType.PATH:
        if len(points) < 2:
            raise rfsynth.MalformedRecord(
                reader.offset, 'PATH needs two points'
            )
        return GdsPath(layer, datatype, width, points)
    if len(points) < 4 or points[0] != points[-1]:
        raise rfsynth.MalformedRecord(reader.offset, 'BOUNDARY is not closed')
    return Boundary(layer, datatype, points)


def load_gds(filename):
    with io.open(filename, 'rb') as fh:
        return read_gds(fh.read())


FlatElement = collections.namedtuple(
    'FlatElement', ['kind', 'layer', 'datatype', 'width', 'points']
)
"""A boundary or path with references resolved, in database units.

``kind`` is ``boundary`` or ``path``; ``width`` is :class:`None` for
boundaries.
"""


def _transform(point, rotation, origin):
    x, y = point
    if rotation == 90:
        x, y = -y, x
    elif rotation == 180:
        x, y = -x, -y
    elif rotation == 270:
        x, y = y, -x
    return (x + origin[0], y + origin[1])


def flatten(lib, top=None):
    """Resolve every reference below ``top`` into absolute geometry.

    ``top`` defaults to the single unreferenced structure. Returns a list
    of :class:`FlatElement` in stream order.
    """
    if top is None:
        tops = lib.top_structures()
        assert len(tops) == 1, 'Library has %d top structures' % len(tops)
        top = tops[0].name
    structures = dict((s.name, s) for s in lib.structures)
    result = []

    def visit(name, transforms, depth):
        assert depth <= len(structures), 'Reference cycle at %s' % name
        for element in structures[name].elements:
            if isinstance(element, SRef):
                visit(
                    element.name,
                    [(element.rotation, element.origin)] + transforms,
                    depth + 1,
                )
                continue
            points = []
            for p in element.points:
                for rotation, origin in transforms:
                    p = _transform(p, rotation, origin)
                points.append(p)
            if isinstance(element, Boundary):
                result.append(
                    FlatElement(
                        'boundary',
                        element.layer,
                        element.datatype,
                        None,
                        tuple(points),
                    )
                )
            else:
                result.append(
                    FlatElement(
                        'path',
                        element.layer,
                        element.datatype,
                        element.width,
                        tuple(points),
                    )
                )

    visit(top, [], 0)
    return result


def _sref_origin(x, y, theta, width, height):
    """Origin that puts a cell rotated by ``theta`` with its rotated
    bounding box corner at ``(x, y)``."""
    if theta == 90:
        return x + height, y
    elif theta == 180:
        return x + width, y + height
    elif theta == 270:
        return x, y + width
    return x, y


def _layer(layers, name):
    try:
        return layers[name]
    except KeyError:
        raise rfsynth.ConfigError('Layer %s is not in the layer map' % name)


def _rect_points(lib, rect):
    return [(lib.to_db(x), lib.to_db(y)) for x, y in rect.points()]


def cell_structure(lib, cell, layers):
    """The structure of one component cell: its shapes, an outline of its
    bounding box and a square mark on the PIN layer at each pin."""
    structure = GdsStructure(cell.name)
    for shape in cell.shapes:
        layer, datatype = _layer(layers, shape.layer)
        structure.elements.append(
            Boundary(layer, datatype, _rect_points(lib, shape.rect))
        )
    layer, datatype = _layer(layers, 'OUTLINE')
    structure.elements.append(
        Boundary(layer, datatype, _rect_points(lib, cell.bbox))
    )
    layer, datatype = _layer(layers, 'PIN')
    for pin in cell.pins:
        mark = Rect(pin.x, pin.y, pin.x, pin.y).inflate(PIN_MARK)
        structure.elements.append(
            Boundary(layer, datatype, _rect_points(lib, mark))
        )
    return structure


def assemble_design(
    netlist,
    placement,
    routed,
    cells,
    layers,
    name='RFSYNTH',
    top='TOP',
    timestamp=None,
):
    """Build the hierarchical library of a placed and routed design.

    Components are looked up in ``cells`` by id. Each distinct cell name
    becomes one child structure, referenced from the ``top`` structure once
    per instance at its placed position and rotation. Routed wires become
    flush-ended paths in the top structure. ``layers`` maps layer names to
    ``(layer, datatype)``.

    Raises :exc:`MissingGeometry` for a placed component without a cell.
    """
    lib = GdsLibrary(name, timestamp=timestamp)
    top_structure = GdsStructure(top)
    children = collections.OrderedDict()
    if netlist is None:
        ids = placement.ids
    else:
        ids = [c.id for c in netlist.components if c.id in placement]
    for component_id in ids:
        cell = cells.get(component_id)
        if cell is None:
            raise rfsynth.MissingGeometry(component_id)
        if cell.name not in children:
            children[cell.name] = cell_structure(lib, cell, layers)
        x, y, theta = placement.position(component_id)
        ox, oy = _sref_origin(x, y, theta, cell.width, cell.height)
        top_structure.elements.append(
            SRef(cell.name, (lib.to_db(ox), lib.to_db(oy)), theta)
        )

    wires = routed.wires if routed is not None else []
    for path in wires:
        width = lib.to_db(path.width)
        for layer_name, x0, y0, x1, y1 in path.segments():
            if abs(x0 - x1) + abs(y0 - y1) < 1e-9:
                continue
            layer, datatype = _layer(layers, layer_name)
            top_structure.elements.append(
                GdsPath(
                    layer,
                    datatype,
                    width,
                    [
                        (lib.to_db(x0), lib.to_db(y0)),
                        (lib.to_db(x1), lib.to_db(y1)),
                    ],
                )
            )

    lib.add(top_structure)
    for structure in children.values():
        lib.add(structure)
    logger.info(
        'Assembled %s: %d cells, %d instances, %d wire segments',
        name,
        len(children),
        len(ids),
        len(top_structure.elements) - len(ids),
    )
    return lib
