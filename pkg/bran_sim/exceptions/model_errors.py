class InvalidParamError(ValueError):
    # Raised when a model parameter violates its invariant.
    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason
        self.message = f"invalid {name}: {reason}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"InvalidParamError: {self.message}"


class UnstableError(ArithmeticError):
    # Raised when a closed-form quantity is requested outside its stability region.
    # `component` names the failing term (tau1, tau2, erlang_c).
    def __init__(self, component: str, reason: str):
        self.component = component
        self.reason = reason
        self.message = f"unstable: {reason}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class ConsistencyWarning(UserWarning):
    # Emitted when a probability had to be clamped by more than floating-point noise.
    pass
