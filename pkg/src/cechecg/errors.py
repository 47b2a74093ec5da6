"""Exception hierarchy. The CLI maps these onto exit codes."""


class PipelineError(Exception):
    exit_code = 1


class ValidationError(PipelineError, ValueError):
    """Bad input or parameters (exit code 2)."""

    exit_code = 2


class ParseError(ValidationError):
    def __init__(self, message, path=None, line=None, offset=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.path, self.line, self.offset = path, line, offset


class ParameterError(ValidationError):
    pass


class StructureError(ValidationError):
    """Malformed filtration or complex."""


class ConsistencyError(ValidationError):
    """Inputs produced under different pipeline parameters."""


class StratificationError(ValidationError):
    pass


class TrainingError(ValidationError):
    pass


class UndefinedEntropyError(ValidationError):
    pass


class DegenerateTestError(ValidationError):
    pass


class HomotopyViolationError(ValidationError):
    """A filtration failed the nerve (non-empty intersection) check."""


class NumericError(PipelineError, ArithmeticError):
    exit_code = 3


class DivergenceError(NumericError):
    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class DependencyError(PipelineError):
    """A stage's upstream artifact is missing (exit code 4)."""

    exit_code = 4

    def __init__(self, stage, detail):
        super().__init__(f"stage '{stage}' is missing its input: {detail}")
        self.stage = stage
