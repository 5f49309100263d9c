"""Convergence analysis of the inverse Bernoulli series.

For index n the reconstruction reads

    P_n = (eta - 1)^-n * sum_{m >= n} (-1)^m a_nm,
    a_nm = (1/eta - 1)^m C(m, n) Q_m,

an alternating series. It converges (Leibniz) once a_nm decreases
monotonically, which is equivalent to

    Q_{m+1} < Q_m (1 - n/(m+1)) eta/(1 - eta)        for all m >= M_n.

The inverse is stable when such an M_n exists for every n. For
eta > 1/2 the binomial factor (1/eta - 1)^m C(m, n) itself decays and every
distribution converges; below that the answer depends on the tail of Q.
Closed-form thresholds are available for the Poisson and compound Poisson
families.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distributions import (
    PMF,
    CompoundPoissonParams,
    FamilyParams,
    PoissonParams,
)
from .errors import IndexOutOfRange, InvalidParameter

# number of trailing term ratios inspected when classifying a truncated tail
TAIL_WINDOW = 10


def _probs(q: PMF | Sequence[float]) -> np.ndarray:
    return q.probs if isinstance(q, PMF) else np.asarray(q, dtype=float)


def _check_open_eta(eta: float) -> None:
    if not (0.0 < eta < 1.0):
        raise InvalidParameter(f"eta must lie strictly between 0 and 1, got {eta!r}")


@dataclass(frozen=True)
class SeriesTerm:
    """One term a_nm of the inverse series, split as factor1 * factor2.

    factor1 = (1/eta - 1)^m C(m, n) depends only on the detector;
    factor2 = Q_m only on the light. ``magnitude`` is evaluated in the log
    domain so it stays finite even when ``factor1`` overflows.
    """

    n: int
    m: int
    magnitude: float
    factor1: float
    factor2: float


def series_terms(q: PMF | Sequence[float], eta: float, n: int) -> list[SeriesTerm]:
    probs = _probs(q)
    _check_open_eta(eta)
    log_r = math.log((1.0 - eta) / eta)
    terms = []
    for m in range(n, probs.size):
        log_f1 = m * log_r + _log_comb(m, n)
        q_m = float(probs[m])
        magnitude = _safe_exp(log_f1 + math.log(q_m)) if q_m > 0 else 0.0
        terms.append(SeriesTerm(n, m, magnitude, _safe_exp(log_f1), q_m))
    return terms


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log_comb(m: int, n: int) -> float:
    return math.lgamma(m + 1) - math.lgamma(n + 1) - math.lgamma(m - n + 1)


def leibniz_onset(log_magnitudes: np.ndarray) -> int | None:
    """First position from which a sequence of log-magnitudes strictly decreases.

    Pairs of zero terms (both -inf) count as decreasing. Returns None when
    the final pair already fails, i.e. no onset exists within the data.
    Sequences shorter than two elements have onset 0.
    """
    x = np.asarray(log_magnitudes, dtype=float)
    if x.size < 2:
        return 0
    with np.errstate(invalid="ignore"):
        ok = (x[1:] < x[:-1]) | (np.isneginf(x[1:]) & np.isneginf(x[:-1]))
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return 0 if bad.size == 0 else int(bad[-1]) + 1


def _criterion_vector(probs: np.ndarray, eta: float, n: int) -> np.ndarray:
    """Truth of the monotonicity criterion for m = n .. len-2."""
    m = np.arange(n, probs.size - 1)
    q_m, q_next = probs[m], probs[m + 1]
    rhs = q_m * (1.0 - n / (m + 1.0)) * (eta / (1.0 - eta))
    both_zero = (q_m == 0) & (q_next == 0)
    return (q_next < rhs) | both_zero


def criterion_holds(q: PMF | Sequence[float], eta: float, n: int, m: int) -> bool:
    """Whether Q_{m+1} < Q_m (1 - n/(m+1)) eta/(1 - eta).

    Two consecutive zeros count as holding; Q_m = 0 followed by a positive
    Q_{m+1} fails.
    """
    probs = _probs(q)
    _check_open_eta(eta)
    if n < 0 or m < n or m + 1 >= probs.size:
        raise IndexOutOfRange(
            f"need 0 <= n <= m and m + 1 < {probs.size}; got n={n}, m={m}"
        )
    q_m, q_next = float(probs[m]), float(probs[m + 1])
    if q_m == 0 and q_next == 0:
        return True
    return q_next < q_m * (1.0 - n / (m + 1)) * (eta / (1.0 - eta))


def find_Mn_empirical(q: PMF | Sequence[float], eta: float, n: int) -> int | None:
    """Smallest M >= n such that the criterion holds for every m in [M, len-2].

    None means the criterion fails at the last available pair. On a
    truncated distribution that is not proof of divergence. Indices at or
    beyond the last component have a single-term (or empty) series and
    return ``n``.
    """
    probs = _probs(q)
    _check_open_eta(eta)
    if n < 0:
        raise IndexOutOfRange(f"n must be nonnegative, got {n}")
    if n >= probs.size - 1:
        return n
    holds = _criterion_vector(probs, eta, n)
    if not holds[-1]:
        return None
    failing = np.flatnonzero(~holds)
    return n if failing.size == 0 else n + int(failing[-1]) + 1


def poisson_Mn(params: PoissonParams, eta: float, n: int) -> int:
    """Closed-form threshold for Poisson statistics: m > n - 1 + (1-eta)/eta * mean."""
    _check_open_eta(eta)
    bound = n - 1 + (1.0 - eta) / eta * params.mean
    return max(n, math.ceil(bound))


def xi(params: FamilyParams, eta: float) -> float:
    """Sign quantity eta/(1-eta) - mean/(a+mean); the Poisson limit drops the second term."""
    _check_open_eta(eta)
    if isinstance(params, PoissonParams):
        return eta / (1.0 - eta)
    a, mean = params.clusterization, params.mean
    return eta / (1.0 - eta) - mean / (a + mean)


def compound_poisson_Mn(params: CompoundPoissonParams, eta: float, n: int) -> int | None:
    """Closed-form threshold for compound Poisson statistics.

    Returns None when xi <= 0: the criterion then bounds m from above and
    no threshold exists.
    """
    s = xi(params, eta)
    if s <= 0:
        return None
    a, mean = params.clusterization, params.mean
    bound = (eta * (n - 1) / (1.0 - eta) + mean * a / (a + mean)) / s
    if bound < 0:
        return 0
    return max(n, math.ceil(bound))


def analytic_Mn(params: FamilyParams, eta: float, n: int) -> int | None:
    if isinstance(params, PoissonParams):
        return poisson_Mn(params, eta, n)
    return compound_poisson_Mn(params, eta, n)


def eta_critical(params: FamilyParams) -> float:
    """Critical efficiency 1/(a/mean + 2); zero for the Poisson family."""
    if isinstance(params, PoissonParams):
        return 0.0
    return 1.0 / (params.clusterization / params.mean + 2.0)


def abel_index(eta: float, n: int) -> int:
    """First m >= n from which (1/eta - 1)^m C(m, n) strictly decreases (eta > 1/2).

    The ratio of consecutive factors is (1/eta - 1)(m+1)/(m+1-n), which is
    below one exactly when m + 1 > eta n / (2 eta - 1).
    """
    if not (0.5 < eta <= 1.0):
        raise InvalidParameter(f"abel_index needs eta in (1/2, 1], got {eta!r}")
    e = Fraction(eta)
    return max(n, math.floor(e * n / (2 * e - 1)))


def tail_ratios(q: PMF | Sequence[float], eta: float, window: int = TAIL_WINDOW) -> np.ndarray:
    """Limiting term ratios (1/eta - 1) Q_{m+1}/Q_m over the last ``window`` pairs.

    For every n, a_{n,m+1}/a_nm equals this ratio times (m+1)/(m+1-n), a
    factor that tends to one, so these values govern the far tail of every
    series at once. Entries with Q_m = 0 are NaN.
    """
    probs = _probs(q)
    _check_open_eta(eta)
    lo = max(0, probs.size - 1 - window)
    q_m, q_next = probs[lo:-1], probs[lo + 1 :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q_m > 0, (1.0 - eta) / eta * q_next / q_m, np.nan)
    return ratio


class Verdict(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class MnRecord:
    """Per-index outcome.

    ``M_n`` is the threshold the verdict relies on and ``source`` says where
    it came from: ``abel`` (eta > 1/2), ``analytic`` (family closed form),
    ``scan`` (criterion observed in the data) or ``extrapolated`` (tail
    ratio projected beyond the support). ``satisfied`` is True when the
    criterion was observed to hold on the supplied data from some index on,
    i.e. when ``M_n_empirical`` exists.
    """

    n: int
    M_n: int | None
    satisfied: bool
    source: str | None = None
    M_n_empirical: int | None = None
    M_n_analytic: int | None = None


@dataclass(frozen=True)
class StabilityReport:
    eta: float
    per_n: tuple[MnRecord, ...]
    verdict: Verdict
    xi: float | None = None
    eta_cr: float | None = None
    tail_ratios: tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "per_n": [asdict(r) for r in self.per_n],
            "xi": self.xi,
            "eta_cr": self.eta_cr,
            "verdict": self.verdict.value,
            "tail_ratios": [None if math.isnan(r) else r for r in self.tail_ratios],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        lines = ["n,M_n,satisfied"]
        for r in self.per_n:
            lines.append(f"{r.n},{'' if r.M_n is None else r.M_n},{str(r.satisfied).lower()}")
        return "\n".join(lines) + "\n"

    def summary_line(self) -> str:
        parts = [f"verdict={self.verdict.value}", f"eta={self.eta!r}"]
        if self.eta_cr is not None:
            parts.append(f"eta_cr={self.eta_cr!r}")
        if self.xi is not None:
            parts.append(f"xi={self.xi!r}")
        return " ".join(parts)


def _classify_tail(ratios: np.ndarray) -> tuple[str, float]:
    if ratios.size == 0 or np.any(np.isnan(ratios)):
        return "inconclusive", math.nan
    if np.all(ratios >= 1.0):
        return "growing", float(np.min(ratios))
    if np.all(ratios < 1.0):
        return "decaying", float(np.max(ratios))
    return "inconclusive", math.nan


def analyze(
    q: PMF | Sequence[float],
    eta: float,
    n_max: int | None = None,
    family: FamilyParams | None = None,
) -> StabilityReport:
    """Decide whether inverting ``q`` at efficiency ``eta`` is stable.

    Args:
        q: Photocount distribution (usually truncated).
        eta: Detection efficiency in (0, 1].
        n_max: Largest reconstruction index examined; defaults to len(q) - 1.
        family: Analytic family that generated ``q``. When given, xi, eta_cr
            and the closed-form thresholds are reported, and for
            eta <= 1/2 they decide the verdict; the empirical scan is kept
            alongside for cross-checking.

    Returns:
        A :class:`StabilityReport`. Without a family, eta <= 1/2 is judged
        from the data: indices whose criterion holds on the support are
        resolved directly; the rest are resolved from the limiting tail
        ratio, which either stays below one over the last window
        (threshold extrapolated), stays at or above one (divergent:
        unstable), or is mixed (undetermined).
    """
    if not (0.0 < eta <= 1.0):
        raise InvalidParameter(f"eta must lie in (0, 1], got {eta!r}")
    probs = _probs(q)
    size = probs.size
    if n_max is None:
        n_max = size - 1
    if n_max < 0:
        raise InvalidParameter(f"n_max must be nonnegative, got {n_max}")

    open_eta = eta < 1.0
    report_xi = eta_cr = None
    if family is not None:
        eta_cr = eta_critical(family)
        if open_eta:
            report_xi = xi(family, eta)

    ratios = tail_ratios(probs, eta) if open_eta else np.zeros(0)
    tail_state, tail_rate = _classify_tail(ratios)

    records = []
    for n in range(n_max + 1):
        emp = find_Mn_empirical(probs, eta, n) if open_eta else n
        ana = analytic_Mn(family, eta, n) if (family is not None and open_eta) else None
        if eta > 0.5:
            m_n, source = abel_index(eta, n), "abel"
        elif family is not None:
            m_n, source = ana, "analytic"
        elif emp is not None:
            m_n, source = emp, "scan"
        elif tail_state == "decaying":
            m_n = max(size - 1, math.floor(n / (1.0 - tail_rate)))
            source = "extrapolated"
        else:
            m_n, source = None, None
        records.append(MnRecord(n, m_n, emp is not None, source, emp, ana))

    if eta > 0.5 or all(r.M_n is not None for r in records):
        verdict = Verdict.STABLE
    elif family is not None or tail_state == "growing":
        verdict = Verdict.UNSTABLE
    else:
        verdict = Verdict.UNDETERMINED
    return StabilityReport(
        eta=eta,
        per_n=tuple(records),
        verdict=verdict,
        xi=report_xi,
        eta_cr=eta_cr,
        tail_ratios=tuple(float(r) for r in ratios),
    )
