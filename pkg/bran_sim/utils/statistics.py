import math
from typing import Optional

import numpy as np
from scipy import stats


def batch_means_halfwidth(samples: np.ndarray, batches: int = 32, confidence: float = 0.95) -> Optional[float]:
    """Confidence half-width of the mean of a correlated sequence by the batch-means method.

    The sequence is cut into `batches` contiguous batches of equal length (the tail
    remainder is dropped). Returns None when there are fewer samples than batches.
    """
    if batches < 2:
        raise ValueError("batch means needs at least 2 batches")
    size = samples.size // batches
    if size == 0:
        return None
    means = samples[: size * batches].reshape(batches, size).mean(axis=1)
    spread = float(np.std(means, ddof=1))
    quantile = float(stats.t.ppf(0.5 + confidence / 2.0, batches - 1))
    return quantile * spread / math.sqrt(batches)


def binomial_stderr(successes: int, trials: int) -> float:
    p_hat = successes / trials
    return math.sqrt(p_hat * (1.0 - p_hat) / trials)
