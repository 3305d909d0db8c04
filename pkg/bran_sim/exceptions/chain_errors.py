class CapacityError(MemoryError):
    # Raised when a truncated state space exceeds the configured number of states.
    def __init__(self, states: int, limit: int):
        self.states = states
        self.limit = limit
        self.message = f"state space of {states} states exceeds the limit of {limit}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"CapacityError: {self.message}"


class SolveFailedError(RuntimeError):
    # Raised when the steady-state linear system could not be solved to tolerance.
    def __init__(self, residual: float, reason: str = "residual above tolerance"):
        self.residual = residual
        self.reason = reason
        self.message = f"{reason} (residual={residual:.3e})"
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"SolveFailedError: {self.message}"


class TruncationWarning(UserWarning):
    # Too much stationary probability sits on the truncation boundary.
    pass
