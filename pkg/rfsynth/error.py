from __future__ import unicode_literals


__all__ = [
    'ArityError',
    'CheckpointError',
    'ConfigError',
    'CoordinateOverflow',
    'DomainError',
    'DuplicateId',
    'EmptyPlacement',
    'EmptySplit',
    'EmptyTestSet',
    'Error',
    'EscapeFailure',
    'GeometryError',
    'InfeasibleBox',
    'LengthMismatch',
    'MalformedRecord',
    'MissingGeometry',
    'NameTooLong',
    'NetlistSyntaxError',
    'RangeError',
    'ShapeError',
    'StageError',
    'Unroutable',
    'Unsatisfiable',
    'UnsupportedRecord',
    'ValidationError',
]


class Error(Exception):

    """An rfsynth error.

    This is the superclass of all custom exceptions raised by rfsynth.
    """

    @classmethod
    def maybe_raise(cls, violations, ignores=None):
        """Raise a :exc:`ValidationError` if ``violations`` contains any
        violation of severity ``error`` whose code is not in the
        ``ignores`` list of violation codes.

        Warnings never raise. Returns the list of violations that were not
        ignored, so callers can log the remaining warnings.
        """
        ignores = set(ignores or [])
        remaining = [v for v in violations if v.code not in ignores]
        errors = [v for v in remaining if v.severity == 'error']
        if errors:
            raise ValidationError(errors)
        return remaining


class ValidationError(Error):

    """A netlist or design failed validation.

    The offending :class:`~rfsynth.Violation` objects are available as
    :attr:`violations`.
    """

    violations = None
    """The list of :class:`~rfsynth.Violation` objects of severity
    ``error``."""

    def __init__(self, violations):
        self.violations = list(violations)
        message = '%d violation(s): %s' % (
            len(self.violations),
            '; '.join('%s' % (v,) for v in self.violations),
        )
        super(ValidationError, self).__init__(message)


class StageError(Error):

    """A pipeline stage failed.

    Wraps the original :exc:`Error` and tags it with the stage name, e.g.
    ``pcell`` or ``routing``.
    """

    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        message = '%s: %s: %s' % (stage, error.__class__.__name__, error)
        super(StageError, self).__init__(message)


class ConfigError(Error):

    """Raised for invalid technology files or configuration values."""


class NetlistSyntaxError(Error):

    """A netlist line could not be fully consumed by the parser."""

    def __init__(self, line, message):
        self.line = line
        super(NetlistSyntaxError, self).__init__(
            'line %d: %s' % (line, message)
        )


class DuplicateId(Error):

    """Two components in a netlist share the same id."""

    def __init__(self, line, component_id):
        self.line = line
        self.component_id = component_id
        super(DuplicateId, self).__init__(
            'line %d: duplicate component id %r' % (line, component_id)
        )


class ArityError(Error):

    """A component has the wrong number of terminals for its kind."""

    def __init__(self, line, component_id, expected, actual):
        self.line = line
        self.component_id = component_id
        super(ArityError, self).__init__(
            'line %d: %s expects %d terminals, got %d'
            % (line, component_id, expected, actual)
        )


class ShapeError(Error):

    """An array does not have the shape the model expects."""


class LengthMismatch(Error):

    """Two vectors that must be equally long are not."""


class EmptySplit(Error):

    """A dataset split required for training is empty."""


class EmptyTestSet(Error):

    """Evaluation was requested on an empty test set."""


class CheckpointError(Error):

    """A model checkpoint is malformed or does not match the
    architecture."""


class DomainError(Error):

    """An input lies outside the domain of a model."""


class InfeasibleBox(Error):

    """The inductor layout box constraints are empty for the given
    width."""


class GeometryError(Error):

    """Layout parameters do not describe valid, non-self-intersecting
    geometry."""


class Unsatisfiable(Error):

    """No PCell design on the search grid meets the target within
    tolerance."""


class EmptyPlacement(Error):

    """A routing grid was requested for a placement without devices."""


class Unroutable(Error):

    """A* exhausted its open set without reaching the target."""

    def __init__(self, message, net=None, edge=None):
        self.net = net
        self.edge = edge
        if net is not None:
            message = 'net %s, edge %r: %s' % (net, edge, message)
        super(Unroutable, self).__init__(message)


class EscapeFailure(Error):

    """A pin could not escape its device in any direction."""


class RangeError(Error):

    """A value cannot be represented in the GDSII 8-byte real format."""


class NameTooLong(Error):

    """A GDSII structure or library name exceeds 32 characters."""


class CoordinateOverflow(Error):

    """A coordinate does not fit a 32-bit signed GDSII integer."""


class MalformedRecord(Error):

    """The GDSII stream is truncated or a record is inconsistent."""

    def __init__(self, offset, message='malformed record'):
        self.offset = offset
        super(MalformedRecord, self).__init__(
            '%s at offset %d' % (message, offset)
        )


class UnsupportedRecord(Error):

    """The GDSII stream contains a record type outside the supported
    subset."""

    def __init__(self, record_type, offset):
        self.record_type = record_type
        self.offset = offset
        super(UnsupportedRecord, self).__init__(
            'unsupported record type 0x%02x at offset %d'
            % (record_type, offset)
        )


class MissingGeometry(Error):

    """A component has no generated cell geometry."""

    def __init__(self, component_id):
        self.component_id = component_id
        super(MissingGeometry, self).__init__(
            'no geometry for component %r' % component_id
        )
