"""Exception hierarchy shared by all posot modules."""


class PosotError(Exception):
    """Base class for every error raised deliberately by posot."""


class ParseError(PosotError, ValueError):
    """Malformed transcript input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DegenerateInputError(PosotError, ValueError):
    """Input is well-formed but carries too little data for the operation."""


class ConvergenceError(PosotError, RuntimeError):
    """An iterative solver stopped at its iteration ceiling."""

    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class ConfigError(PosotError, ValueError):
    """Invalid experiment configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
