"""Probability mass functions for photon-number and photocount statistics.

The :class:`PMF` container validates nonnegativity and normalization and
records how much probability was cut off when an infinite law is truncated.
Generators for the Poisson and compound Poisson (negative binomial) laws
evaluate every term in the log domain so that supports reaching thousands
of components neither overflow nor underflow prematurely.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy import special, stats

from .errors import (
    EmptyInput,
    InvalidParameter,
    NegativeEntry,
    NonFiniteInput,
    NotNormalized,
)

EPS_NORM_ANALYTIC = 1e-12
EPS_NORM_DATA = 1e-9
DEFAULT_EPSILON_TAIL = 1e-12
MAX_EPSILON_TAIL = 1e-3


class Origin(str, enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"
    USER = "user"


def normalization_tolerance(origin: Origin) -> float:
    return EPS_NORM_ANALYTIC if origin is Origin.ANALYTIC else EPS_NORM_DATA


@dataclass(frozen=True, eq=False)
class PMF:
    """A finite, validated probability vector indexed from zero.

    Attributes:
        probs: Read-only float array of probabilities.
        tail_mass: Probability discarded beyond the last retained index.
        origin: Where the values came from; sets the normalization tolerance.
        epsilon_tail: Upper bound allowed for ``tail_mass``.
    """

    probs: np.ndarray
    tail_mass: float = 0.0
    origin: Origin = Origin.USER
    epsilon_tail: float = MAX_EPSILON_TAIL

    def __post_init__(self) -> None:
        origin = Origin(self.origin)
        probs = np.array(self.probs, dtype=float).ravel()
        if probs.size == 0:
            raise EmptyInput("a PMF needs at least one component")
        if not np.all(np.isfinite(probs)):
            raise NonFiniteInput("PMF entries must be finite")
        bad = np.flatnonzero(probs < 0)
        if bad.size:
            raise NegativeEntry(
                f"negative probability {probs[bad[0]]!r} at index {int(bad[0])}"
            )
        tail = float(self.tail_mass)
        if not (0.0 <= tail <= self.epsilon_tail):
            raise InvalidParameter(
                f"tail_mass {tail!r} outside [0, {self.epsilon_tail!r}]"
            )
        total = math.fsum(probs)
        tol = normalization_tolerance(origin)
        if not (1.0 - tol - tail <= total <= 1.0 - tail + tol):
            raise NotNormalized(
                f"sum {total!r} + tail_mass {tail!r} deviates from 1 by more than {tol:g}"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail)
        object.__setattr__(self, "origin", origin)

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PMF):
            return NotImplemented
        return (
            np.array_equal(self.probs, other.probs)
            and self.tail_mass == other.tail_mass
            and self.origin is other.origin
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def mean(self) -> float:
        return math.fsum(np.arange(self.probs.size) * self.probs)

    def padded(self, dim: int) -> np.ndarray:
        """Return the probabilities zero-padded (never truncated) to ``dim``."""
        if dim < self.probs.size:
            raise ValueError(f"cannot pad length {self.probs.size} down to {dim}")
        out = np.zeros(dim)
        out[: self.probs.size] = self.probs
        return out

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "probs": [float(p) for p in self.probs],
            "tail_mass": self.tail_mass,
            "origin": self.origin.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PMF":
        tail = float(data.get("tail_mass", 0.0))
        return cls(
            np.asarray(data["probs"], dtype=float),
            tail_mass=tail,
            origin=Origin(data.get("origin", "user")),
            epsilon_tail=max(MAX_EPSILON_TAIL, tail),
        )

    @classmethod
    def from_json(cls, text: str) -> "PMF":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        return values_to_csv(self.probs, "probability")

    @classmethod
    def from_csv(cls, text: str, origin: Origin = Origin.USER) -> "PMF":
        return cls(np.asarray(values_from_csv(text), dtype=float), origin=origin)


def values_to_csv(values: Iterable[float], column: str) -> str:
    """Two-column CSV (index, value) using shortest round-trip decimals."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", column])
    for i, v in enumerate(values):
        writer.writerow([i, repr(float(v))])
    return buf.getvalue()


def values_from_csv(text: str) -> list[float]:
    """Read the second column of an (index, value) CSV with a header row."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyInput("CSV input has no rows")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise InvalidParameter("CSV needs an index column and a value column")
    if not body:
        raise EmptyInput("CSV input has a header but no data")
    values = []
    for expected, row in enumerate(body):
        if int(row[0]) != expected:
            raise InvalidParameter(
                f"CSV indices must run 0, 1, 2, ...; got {row[0]!r} at row {expected}"
            )
        values.append(float(row[1]))
    return values


# analytic families ------------------------------------------------------


@dataclass(frozen=True)
class PoissonParams:
    mean: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise InvalidParameter(f"Poisson mean must be > 0, got {self.mean!r}")


@dataclass(frozen=True)
class CompoundPoissonParams:
    """Mean photocount and clusterization (bunching) parameter ``a``.

    ``a = 1`` is thermal light; ``a -> inf`` recovers the Poisson law.
    """

    mean: float
    clusterization: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise InvalidParameter(f"mean must be > 0, got {self.mean!r}")
        if not (self.clusterization > 0):
            raise InvalidParameter(
                f"clusterization must be > 0, got {self.clusterization!r}"
            )


FamilyParams = PoissonParams | CompoundPoissonParams


def _check_epsilon_tail(epsilon_tail: float) -> None:
    if not (0 < epsilon_tail <= MAX_EPSILON_TAIL):
        raise InvalidParameter(
            f"epsilon_tail must lie in (0, {MAX_EPSILON_TAIL:g}], got {epsilon_tail!r}"
        )


def _truncation_index(sf, epsilon_tail: float, guess: float) -> int:
    """Smallest N >= 0 with sf(N) = P(X > N) < epsilon_tail."""
    hi = max(int(guess) if math.isfinite(guess) else 1, 1)
    while not sf(hi) < epsilon_tail:
        hi *= 2
    lo = -1  # sf(-1) = 1 >= epsilon_tail
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if sf(mid) < epsilon_tail:
            hi = mid
        else:
            lo = mid
    return hi


def poisson_logpmf(mean: float, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return special.xlogy(m, mean) - mean - special.gammaln(m + 1)


def poisson_pmf(params: PoissonParams, epsilon_tail: float = DEFAULT_EPSILON_TAIL) -> PMF:
    """Poisson photocount law truncated once the remaining tail is below ``epsilon_tail``."""
    _check_epsilon_tail(epsilon_tail)
    mean = params.mean
    law = stats.poisson(mean)
    n_last = _truncation_index(
        lambda k: float(law.sf(k)), epsilon_tail, mean + 10 * math.sqrt(mean) + 10
    )
    probs = np.exp(poisson_logpmf(mean, np.arange(n_last + 1)))
    return PMF(
        probs,
        tail_mass=float(law.sf(n_last)),
        origin=Origin.ANALYTIC,
        epsilon_tail=epsilon_tail,
    )


def compound_poisson_logpmf(params: CompoundPoissonParams, m: np.ndarray) -> np.ndarray:
    """Float log of Gamma(a+m)/(m! Gamma(a)) (mean/a)^m (1+mean/a)^-(m+a).

    Fast, but each log-gamma carries an absolute error of a few ulps of its
    own magnitude, so terms far out in the tail are only good to ~1e-12
    relative. :func:`compound_poisson_pmf` uses the extended-precision path.
    """
    m = np.asarray(m, dtype=float)
    a, mean = params.clusterization, params.mean
    coeff = special.gammaln(a + m) - special.gammaln(a) - special.gammaln(m + 1)
    return coeff - m * np.log1p(a / mean) - a * np.log1p(mean / a)


def _compound_poisson_direct(params: CompoundPoissonParams, length: int) -> np.ndarray:
    # log-gamma differences carried at 30 digits, then rounded once
    with mpmath.workdps(30):
        a = mpmath.mpf(params.clusterization)
        mean = mpmath.mpf(params.mean)
        log_ratio = -mpmath.log1p(a / mean)
        log_base = -a * mpmath.log1p(mean / a)
        lg_a = mpmath.loggamma(a)
        out = np.empty(length)
        for m in range(length):
            log_q = (
                mpmath.loggamma(a + m) - lg_a - mpmath.loggamma(m + 1)
                + m * log_ratio + log_base
            )
            out[m] = float(mpmath.exp(log_q))
    return out


def compound_poisson_recurrence(params: CompoundPoissonParams, length: int) -> np.ndarray:
    """Same law by the forward ratio Q_{m+1} = Q_m (a+m)/(m+1) mean/(a+mean)."""
    a, mean = params.clusterization, params.mean
    ratio = mean / (a + mean)
    out = np.empty(length)
    out[0] = math.exp(-a * math.log1p(mean / a))
    for m in range(length - 1):
        out[m + 1] = out[m] * (a + m) / (m + 1) * ratio
    return out


def _nbinom(params: CompoundPoissonParams):
    a, mean = params.clusterization, params.mean
    return stats.nbinom(a, a / (a + mean))


def compound_poisson_pmf(
    params: CompoundPoissonParams,
    epsilon_tail: float = DEFAULT_EPSILON_TAIL,
    method: str = "direct",
) -> PMF:
    """Compound Poisson (negative binomial) photocount law.

    Args:
        params: Mean photocount and clusterization parameter ``a > 0``.
        epsilon_tail: Truncate at the first index where the remaining tail
            mass drops below this value.
        method: ``"direct"`` evaluates every term independently from
            log-gamma differences; ``"recurrence"`` multiplies successive
            term ratios starting from Q_0.

    Returns:
        An analytic :class:`PMF` with ``tail_mass`` set.
    """
    _check_epsilon_tail(epsilon_tail)
    law = _nbinom(params)
    mean, a = params.mean, params.clusterization
    spread = math.sqrt(mean + mean * mean / a)
    n_last = _truncation_index(
        lambda k: float(law.sf(k)), epsilon_tail, mean + 10 * spread + 10
    )
    if method == "direct":
        probs = _compound_poisson_direct(params, n_last + 1)
    elif method == "recurrence":
        probs = compound_poisson_recurrence(params, n_last + 1)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    return PMF(
        probs,
        tail_mass=float(law.sf(n_last)),
        origin=Origin.ANALYTIC,
        epsilon_tail=epsilon_tail,
    )


def family_pmf(params: FamilyParams, epsilon_tail: float = DEFAULT_EPSILON_TAIL) -> PMF:
    if isinstance(params, PoissonParams):
        return poisson_pmf(params, epsilon_tail)
    return compound_poisson_pmf(params, epsilon_tail)


def pmf_from_values(values: Sequence[float], policy: str = "strict") -> PMF:
    """Build a user PMF from raw values.

    ``strict`` validates as-is. ``renormalize`` rescales nonnegative input to
    unit sum. Negative entries are rejected under both policies; they are
    never clipped.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise EmptyInput("no values given")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("values must be finite")
    bad = np.flatnonzero(arr < 0)
    if bad.size:
        raise NegativeEntry(f"negative value {arr[bad[0]]!r} at index {int(bad[0])}")
    if policy == "strict":
        return PMF(arr, origin=Origin.USER)
    if policy == "renormalize":
        total = math.fsum(arr)
        if total <= 0:
            raise NotNormalized("cannot renormalize values that sum to zero")
        return PMF(arr / total, origin=Origin.USER)
    raise InvalidParameter(f"unknown policy {policy!r}")


def as_pmf(p: PMF | Sequence[float]) -> PMF:
    return p if isinstance(p, PMF) else pmf_from_values(p, "strict")
