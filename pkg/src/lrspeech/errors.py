"""Exception hierarchy shared by all lrspeech modules."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all errors raised by this toolkit."""


class ParseError(ToolkitError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(ToolkitError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id: {record_id!r}")
        self.record_id = record_id


class InvalidField(ToolkitError):
    def __init__(self, field: str, value, detail: str = ""):
        msg = f"invalid value for {field!r}: {value!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.field = field
        self.value = value


class UnsupportedFormat(ToolkitError):
    pass


class ClipTooShort(ToolkitError):
    pass


class SampleRateMismatch(ToolkitError):
    pass


class OrderTooLarge(ToolkitError):
    pass


class NoSpeechActivity(ToolkitError):
    pass


class LengthMismatch(ToolkitError):
    pass


class AlignmentMismatch(ToolkitError):
    pass


class InsufficientData(ToolkitError):
    pass


class BinTooSmall(ToolkitError):
    def __init__(self, bin_label: str, size: int, batch_size: int):
        super().__init__(
            f"bin {bin_label!r} has {size} effective entries, "
            f"fewer than batch size {batch_size}"
        )
        self.bin_label = bin_label
        self.size = size
        self.batch_size = batch_size


class EmptySequence(ToolkitError):
    pass


class ZeroVector(ToolkitError):
    pass


class TooFewItems(ToolkitError):
    pass


class AllItemsFailed(ToolkitError):
    pass


class MissingTarget(ToolkitError):
    def __init__(self, record_id: str):
        super().__init__(f"no target vector for record {record_id!r}")
        self.record_id = record_id


class DivergenceDetected(ToolkitError):
    pass


class ConfigError(ToolkitError):
    pass


class UsageError(ToolkitError):
    pass
