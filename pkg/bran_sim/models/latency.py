from pydantic import BaseModel, ConfigDict


class LatencyReport(BaseModel):
    """Closed-form latency components and bounds for one parameter set (time units)."""

    model_config = ConfigDict(frozen=True)

    tau1: float  # block-inclusion queue sojourn, M/M/1
    tau2: float  # service queue sojourn, M/M/s
    tau3: float  # confirmation delay
    tau_s: float  # expected sojourn tau1 + tau2 + tau3
    tau_t: float  # tau_s minus the mean service time
    upper: float
    lower: float
