"""Exception types shared across the pipeline stages."""


class ConfabError(Exception):
    """Base class for all pipeline errors."""


class InvariantViolation(ConfabError):
    """A domain object failed validation; message names the offending field."""


class ConfigParseError(ConfabError):
    """A config file could not be parsed; carries file and field context."""

    def __init__(self, message, path=None, field=None):
        ctx = []
        if path:
            ctx.append(str(path))
        if field:
            ctx.append(f"field '{field}'")
        prefix = " ".join(ctx)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.field = field


# materials
class NonDielectric(ConfabError):
    pass


class EmptyTable(ConfabError):
    pass


class NonUnitDirection(ConfabError):
    pass


class UnknownMaterial(ConfabError):
    pass


# antenna_design
class NonPhysical(ConfabError):
    pass


class SelfIntersection(ConfabError):
    pass


# surface_geom / projection
class DomainError(ConfabError):
    pass


class CurvatureViolation(ConfabError):
    pass


class OutOfExtent(ConfabError):
    pass


class IncompatibleSurface(ConfabError):
    pass


# em_predict
class NoOverlap(ConfabError):
    pass


class S11FormatError(ConfabError):
    pass


# pathplan
class UnsliceableGeometry(ConfabError):
    pass


class RasterFailure(ConfabError):
    pass


# kinematics
class Unreachable(ConfabError):
    pass


class ZeroLengthSegment(ConfabError):
    pass


# gcode
class GcodeSyntaxError(ConfabError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" at line {line}" + (f", col {column}" if column is not None else "")
        super().__init__(message + loc)
        self.line = line
        self.column = column


class UnsupportedCode(ConfabError):
    def __init__(self, code, line=None):
        super().__init__(
            f"unsupported G-code word '{code}'" + (f" at line {line}" if line else "")
        )
        self.code = code
        self.line = line


# cli
class UnknownFeature(ConfabError):
    pass


class StageError(ConfabError):
    """Wraps a module error with the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
