"""Exception types shared by every stage of the pipeline.

Each error carries a machine-readable ``code`` (``"SYNTAX"``,
``"INFEASIBLE"``, ...) so callers such as the CLI can map failures to exit
codes without parsing messages.
"""


class NvxError(Exception):
    def __init__(self, code, message, line=None):
        self.code = code
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(f"{code}: {message}")


class ProfileError(NvxError):
    pass


class PartitionError(NvxError):
    pass


class TraceError(NvxError):
    pass


class SimulationError(NvxError):
    pass


class StallError(SimulationError):
    """Lock-order replay reached a state where no process can make progress."""

    def __init__(self, blocked):
        self.blocked = tuple(blocked)
        desc = ", ".join(f"variant {v} group {g} ({why})" for v, g, why in self.blocked)
        super().__init__("STALL", f"no runnable process; blocked: {desc}")
