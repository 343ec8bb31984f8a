# Copyright (c) mm-opinion-miner contributors
"""
Paired two-sided t-tests between metric vectors of two runs.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import betainc

from typing import Any, Dict, Optional, Sequence

__all__ = ["Verdict", "TTestResult", "paired_ttest", "significance_stars"]


class Verdict(str, Enum):
    TESTED = "tested"
    NO_DIFFERENCE = "no difference"
    ZERO_VARIANCE = "zero variance"


@dataclass(frozen=True)
class TTestResult:
    """
    `statistic` and `p_value` are None when every paired difference is zero.
    With identical non-zero differences the statistic is infinite and the
    p-value 0.
    """
    statistic: Optional[float]
    df: int
    p_value: Optional[float]
    verdict: Verdict = Verdict.TESTED

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)

    def to_dict(self) -> Dict[str, Any]:
        statistic: Any = self.statistic
        if statistic is not None and math.isinf(statistic):
            statistic = "inf" if statistic > 0 else "-inf"
        return {"t": statistic, "df": self.df, "p": self.p_value,
                "verdict": self.verdict.value}


def _two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for Student's t with `df` degrees of freedom."""
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """
    t = mean(d) / (sd(d) / sqrt(n)) over the differences d = a - b, with the
    sample standard deviation; df = n - 1.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"paired samples must be equal-length vectors, got "
                         f"{x.shape} and {y.shape}")
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"a paired t-test needs at least 2 pairs, got {n}")
    d = x - y
    df = n - 1
    if np.all(d == 0):
        return TTestResult(None, df, None, Verdict.NO_DIFFERENCE)
    sd = float(np.std(d, ddof=1))
    mean = float(np.mean(d))
    if sd == 0.0:
        logging.warning(f"all {n} paired differences equal {mean:g}; "
                        "reporting p = 0")
        return TTestResult(math.copysign(math.inf, mean), df, 0.0,
                           Verdict.ZERO_VARIANCE)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, df, _two_sided_p(t, df))


def significance_stars(p: Optional[float]) -> str:
    """*** below 0.01, ** below 0.05, * below 0.10."""
    if p is None:
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""
