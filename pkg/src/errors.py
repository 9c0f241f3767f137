class CadopsError(Exception):
    """Base for every domain failure raised by the library.

    The CLI maps these to exit code 1.
    """

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)

    def __str__(self) -> str:
        return f"{type(self).__name__}: {self.message}"


class BRepSyntaxError(CadopsError):
    """Malformed B-Rep document (not valid JSON)."""

    def __init__(self, message: str, *, line: int, offset: int) -> None:
        self.line = line
        self.offset = offset
        super().__init__(f"{message} (line {line}, offset {offset})")


class SchemaError(CadopsError):
    """Document is valid JSON but violates the B-Rep schema."""


class TopologyError(CadopsError):
    """A structural B-Rep invariant does not hold.

    ``rule`` names the invariant, ``entity``/``entity_id`` the offender.
    """

    def __init__(self, rule: str, *, entity: str, entity_id: int, detail: str = "") -> None:
        self.rule = rule
        self.entity = entity
        self.entity_id = entity_id
        text = f"{rule} violated at {entity} {entity_id}"
        super().__init__(f"{text}: {detail}" if detail else text)


class DegenerateModel(CadopsError):
    """Bounding box has zero extent."""


class UnsupportedSurface(CadopsError):
    """No sampler exists for the surface kind."""


class GenerationRetryExceeded(CadopsError):
    """Placement sampling failed too many times."""


class ShapeError(CadopsError):
    """Array shapes disagree."""


class GraphError(CadopsError):
    """The recorded computation cannot be differentiated."""


class VersionError(CadopsError):
    """Unknown or corrupted artifact format version."""


class DegenerateInput(CadopsError):
    """Both RIoU operands are all-zero."""


class DegenerateAxis(CadopsError):
    """All side-face normals are parallel; no extrusion axis can be estimated."""


class EmptySketch(CadopsError):
    """A sketch has no segments to export."""


class VocabularyMismatch(CadopsError):
    """Prediction and ground-truth vocabularies differ."""


class UnknownLabel(CadopsError):
    """A label is not in the vocabulary."""


class ConfigError(CadopsError):
    """Invalid run configuration (unknown key, bad value)."""


class IoError(CadopsError):
    """Reading or writing an artifact failed."""
