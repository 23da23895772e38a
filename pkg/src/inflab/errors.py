"""Exception hierarchy shared by every module."""


class InflabError(Exception):
    pass


class UsageError(InflabError, ValueError):
    """Bad arguments: unknown node ids, malformed files, out-of-range parameters."""


class ContractViolation(InflabError, RuntimeError):
    """An internal precondition was broken, e.g. switching a non-switchable node."""


class ScheduleViolation(InflabError):
    def __init__(self, step: int, node: int, reason: str = "not switchable"):
        self.step = step
        self.node = node
        super().__init__(f"schedule step {step}: node {node} {reason}")


class SizeGuardError(InflabError):
    pass


class ParameterError(UsageError):
    """Construction parameters that cannot be realized."""


class BlackBoxValidationError(InflabError):
    """A PROP black-box instance failed its replay check."""


class GoodEventFailure(InflabError):
    """The random coloring fell outside the event a construction's schedule needs."""

    def __init__(self, event: str, diagnostics: dict | None = None):
        self.event = event
        self.diagnostics = diagnostics or {}
        super().__init__(f"good-event failure: {event}")
