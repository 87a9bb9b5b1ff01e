"""Exception hierarchy shared by the engine, the HTTP service and the CLI."""


class FairdeskError(Exception):
    """Base class for all engine errors."""

    code = "error"


class ValidationError(FairdeskError):
    """Bad input: unknown columns, malformed values, out-of-range arguments."""

    code = "validation"


class SchemaError(ValidationError):
    """Header or column-level problem (duplicate names, bad kinds)."""

    code = "schema"


class CsvStructureError(ValidationError):
    """Structural CSV defect such as a ragged row."""

    code = "csv_structure"

    def __init__(self, message, row_index=None):
        super().__init__(message)
        self.row_index = row_index


class EmptyDatasetError(ValidationError):
    code = "empty_dataset"


class StateError(FairdeskError):
    """Operation called in the wrong session state (HTTP 409)."""

    code = "state"


class NotFoundError(FairdeskError):
    """Unknown entity id (HTTP 404)."""

    code = "not_found"
