import math

from bran_sim.exceptions.model_errors import InvalidParamError, UnstableError


def erlang_b(s: int, a: float) -> float:
    """Blocking probability of an M/M/s/s system with offered load a."""
    if s < 1:
        raise InvalidParamError("s", f"must be >= 1, got {s}")
    if not math.isfinite(a) or a < 0:
        raise InvalidParamError("a", f"offered load must be finite and >= 0, got {a}")
    b = 1.0
    for m in range(1, s + 1):
        b = a * b / (m + a * b)
    return b


def erlang_c(s: int, a: float) -> float:
    """Probability that an arrival waits in an M/M/s queue with offered load a = lambda / mu."""
    if not math.isfinite(a) or a < 0:
        raise InvalidParamError("a", f"offered load must be finite and >= 0, got {a}")
    if a >= s:
        raise UnstableError("erlang_c", f"offered load {a} >= servers {s}")
    b = erlang_b(s, a)
    c = s * b / (s - a * (1.0 - b))
    return min(1.0, max(0.0, c))
