"""Exception hierarchy shared by the codec modules.

Each class maps to one CLI exit code.
"""


class CodecError(Exception):
    exit_code = 1


class ValidationError(CodecError, ValueError):
    exit_code = 2


class CodecIOError(CodecError, OSError):
    exit_code = 3


class BitstreamError(CodecError):
    exit_code = 4

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
