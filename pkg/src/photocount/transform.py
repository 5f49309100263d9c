"""Forward and inverse Bernoulli transform.

The forward map sends a photon-number distribution P to the photocount
distribution Q seen by a detector of efficiency ``eta``::

    Q_m = sum_{n >= m} C(n, m) eta^m (1 - eta)^(n - m) P_n

and its inverse is the (alternating, for eta < 1) series::

    P_n = sum_{m >= n} C(m, n) eta^-n (1 - 1/eta)^(m - n) Q_m

Two arithmetic modes are offered. The float path evaluates each term as
sign * exp(log-magnitude) and accumulates in ascending index with
``math.fsum``. The inverse is badly conditioned: relative perturbations of
Q are amplified by up to C(k, n) (2 - 2 eta)^(k - n), so at dimensions of a
few dozen the float result is dominated by rounding. The exact path
(``forward_exact`` / ``inverse_exact``) works on the dyadic rationals that
floats represent and returns ``flint.fmpq`` values with no rounding at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from numbers import Rational
from typing import Sequence

import numpy as np
from flint import fmpq, fmpq_poly
from scipy import special

from .distributions import PMF, as_pmf
from .errors import DimensionMismatch, EtaZero, InvalidParameter, NonFiniteInput


@dataclass(frozen=True)
class TransformSpec:
    """Detection efficiency and number of retained components (N + 1)."""

    eta: float
    dim: int

    def __post_init__(self) -> None:
        eta = float(self.eta)
        if eta == 0.0:
            raise EtaZero("detection efficiency must be > 0")
        if not (0.0 < eta <= 1.0):
            raise InvalidParameter(f"eta must lie in (0, 1], got {self.eta!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidParameter(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    """Upper-triangular Bernoulli matrix; row m, column n."""

    spec: TransformSpec
    entries: np.ndarray

    def column(self, n: int) -> np.ndarray:
        return self.entries[:, n]


@dataclass(frozen=True, eq=False)
class SignedDistribution:
    """Reconstructed P_n values, which may fall outside [0, 1].

    ``values`` is a float array for the float path and a tuple of
    ``flint.fmpq`` for the exact path. ``converged[n]`` is False when the
    magnitudes of the series terms for index n are not eventually strictly
    decreasing over the available support. ``max_term_magnitude[n]`` is the
    largest |term| encountered while summing index n.
    """

    values: np.ndarray | tuple
    converged: np.ndarray
    max_term_magnitude: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @property
    def exact(self) -> bool:
        return isinstance(self.values, tuple)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def total(self):
        """Sum of values; exact for the exact path, ``math.fsum`` otherwise."""
        if self.exact:
            # coefficient sum = polynomial at 1, evaluated in C
            return fmpq_poly(list(self.values))(fmpq(1))
        return math.fsum(self.values)

    def to_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "converged": [bool(c) for c in self.converged],
            "max_term_magnitude": [float(x) for x in self.max_term_magnitude],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        lines = ["index,value,converged,max_term_magnitude"]
        for i, (v, c, t) in enumerate(
            zip(self.values, self.converged, self.max_term_magnitude)
        ):
            lines.append(f"{i},{float(v)!r},{str(bool(c)).lower()},{float(t)!r}")
        return "\n".join(lines) + "\n"


# float path ------------------------------------------------------------------


def _log_binom_table(dim: int) -> np.ndarray:
    return special.gammaln(np.arange(dim) + 1.0)


def build_matrix(spec: TransformSpec) -> TransformMatrix:
    """Bernoulli matrix T with T[m, n] = C(n, m) eta^m (1 - eta)^(n - m)."""
    dim, eta = spec.dim, spec.eta
    lf = _log_binom_table(dim)
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    k = np.clip(n - m, 0, None)
    log_entries = (
        lf[n] - lf[m] - lf[k]
        + special.xlogy(m, eta)
        + special.xlog1py(k, -eta)
    )
    entries = np.where(n >= m, np.exp(log_entries), 0.0)
    entries.setflags(write=False)
    return TransformMatrix(spec, entries)


def forward(p: PMF | Sequence[float], spec: TransformSpec) -> PMF:
    """Photocount distribution produced by efficiency ``spec.eta``.

    The output has ``spec.dim`` components and inherits the input's
    tail mass and origin.
    """
    p = as_pmf(p)
    if len(p) > spec.dim:
        raise DimensionMismatch(f"PMF has {len(p)} components but dim is {spec.dim}")
    probs = p.padded(spec.dim)
    t = build_matrix(spec).entries
    q = np.array([math.fsum(t[m, m:] * probs[m:]) for m in range(spec.dim)])
    return PMF(q, tail_mass=p.tail_mass, origin=p.origin, epsilon_tail=p.epsilon_tail)


def _as_float_vector(q, dim: int | None) -> np.ndarray:
    arr = np.array([float(v) for v in q], dtype=float)
    if arr.size == 0:
        raise DimensionMismatch("empty input")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("input contains NaN or infinity")
    if dim is not None:
        if arr.size > dim:
            raise DimensionMismatch(f"input has {arr.size} components but dim is {dim}")
        arr = np.concatenate([arr, np.zeros(dim - arr.size)])
    return arr


def inverse_log_terms(q: np.ndarray, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Signs and log-magnitudes of every inverse series term.

    Row n, column m holds the term of Q_m in the series for P_n. Entries
    with m < n, and those with Q_m = 0, have sign 0 and log-magnitude -inf.
    """
    q = np.asarray(q, dtype=float)
    dim = q.size
    m = np.arange(dim)
    n = m[:, None]
    k = m - n
    below = k < 0
    kk = np.where(below, 0, k)
    lf = special.gammaln(m + 1.0)
    with np.errstate(divide="ignore"):
        log_q = np.log(np.abs(q))
    log_mag = (
        lf[m] - lf[n] - lf[kk]
        + special.xlogy(kk, (1.0 - eta) / eta)
        - n * math.log(eta)
        + log_q[m]
    )
    log_mag[below] = -np.inf
    sign = np.where(kk % 2 == 0, 1.0, -1.0) * np.sign(q)[m]
    sign[below] = 0.0
    return sign, log_mag


def _inverse_float(q: np.ndarray, eta: float, with_values: bool = True):
    dim = q.size
    sign, log_mag = inverse_log_terms(q, eta)
    with np.errstate(over="ignore"):
        max_term = np.exp(np.max(log_mag, axis=1))
    finite = np.isfinite(max_term)
    # a strictly decreasing run to the end of the support exists iff the last pair decreases
    if dim >= 2:
        last, prev = log_mag[:, -1], log_mag[:, -2]
        tail_ok = (last < prev) | (np.isneginf(last) & np.isneginf(prev))
        tail_ok[dim - 1] = True
    else:
        tail_ok = np.ones(dim, dtype=bool)
    converged = finite & tail_ok
    values = None
    if with_values:
        with np.errstate(over="ignore", invalid="ignore"):
            terms = np.where(sign == 0, 0.0, sign * np.exp(log_mag))
        values = np.array(
            [math.fsum(terms[n, n:]) if finite[n] else math.nan for n in range(dim)]
        )
    return values, converged, max_term


def inverse(q: Sequence[float], spec: TransformSpec, exact: bool = False) -> SignedDistribution:
    """Reconstruct P from Q by the inverse Bernoulli series.

    Args:
        q: Photocount values, at most ``spec.dim`` of them (zero-padded).
            Any finite reals are accepted, including ``fmpq``/``Fraction``.
        spec: Efficiency and output length.
        exact: Return exact rational values instead of floats. The
            ``converged`` and ``max_term_magnitude`` diagnostics are always
            computed in floating point.

    Raises:
        EtaZero: ``spec.eta`` is zero.
        NonFiniteInput: ``q`` contains NaN or infinity.
        DimensionMismatch: ``q`` is longer than ``spec.dim``.
    """
    qf = _as_float_vector(q, spec.dim)
    values, converged, max_term = _inverse_float(qf, spec.eta, with_values=not exact)
    if exact:
        if isinstance(q, np.ndarray) and q.dtype.kind == "f":
            padded = qf  # same doubles, already zero-padded
        else:
            padded = list(q) + [0] * (spec.dim - len(q))
        values = tuple(inverse_exact(padded, spec.eta))
    return SignedDistribution(values, converged, max_term)


def _back_substitute(t, q, zero):
    dim = len(q)
    p = [zero] * dim
    max_term = np.zeros(dim)
    for k in range(dim - 1, -1, -1):
        products = [t[k][j] * p[j] for j in range(k + 1, dim)]
        if zero == 0.0:
            rest = math.fsum(products)
        else:
            rest = sum(products, zero)
        p[k] = (q[k] - rest) / t[k][k]
        max_term[k] = max([abs(float(x)) for x in products] + [abs(float(q[k]))])
    return p, max_term


def inverse_via_solve(q: Sequence[float], spec: TransformSpec, exact: bool = False) -> SignedDistribution:
    """Solve T P = Q by back-substitution on the triangular matrix.

    This route never touches the inverse series and is used to cross-check
    :func:`inverse`. Every reconstructed index is flagged converged since
    the solve is a finite computation.
    """
    if len(q) != spec.dim:
        raise DimensionMismatch(f"input has {len(q)} components but dim is {spec.dim}")
    qf = _as_float_vector(q, None)
    if exact:
        t = exact_matrix(spec.eta, spec.dim)
        values, max_term = _back_substitute(t, [_to_fmpq(v) for v in q], fmpq(0))
        values = tuple(values)
    else:
        t = build_matrix(spec).entries
        values, max_term = _back_substitute(t, list(qf), 0.0)
        values = np.array(values)
    return SignedDistribution(values, np.ones(spec.dim, dtype=bool), max_term)


# exact path ------------------------------------------------------------------


def _to_fmpq(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    if isinstance(x, int):
        return fmpq(x)
    if isinstance(x, Rational):
        return fmpq(int(x.numerator), int(x.denominator))
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteInput(f"cannot represent {x!r} exactly")
    return fmpq(*x.as_integer_ratio())


def _exact_eta(eta) -> fmpq:
    e = _to_fmpq(eta)
    if e <= 0:
        raise EtaZero("detection efficiency must be > 0")
    if e > 1:
        raise InvalidParameter(f"eta must lie in (0, 1], got {eta!r}")
    return e


def _exact_input(values):
    """Keep float arrays as arrays (fast conversion path); anything else becomes a list."""
    if isinstance(values, np.ndarray) and values.dtype.kind == "f":
        return values.ravel()
    return list(values)


def _substitute(values, c0: fmpq, c1: fmpq) -> list[fmpq]:
    """Coefficients of V(c0 + c1 z), where V has coefficients ``values``."""
    if isinstance(values, np.ndarray) and values.dtype.kind == "f":
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("input contains NaN or infinity")
        coeffs = [fmpq(*v.as_integer_ratio()) for v in values.tolist()]
    else:
        coeffs = [_to_fmpq(v) for v in values]
    poly = fmpq_poly(coeffs)
    out = poly(fmpq_poly([c0, c1])).coeffs()
    return out + [fmpq(0)] * (len(values) - len(out))


def forward_exact(p, eta, dim: int | None = None) -> list[fmpq]:
    """Exact Bernoulli transform of rational (or float) values.

    Uses the generating-function identity Q(z) = P(1 - eta + eta z).
    """
    values = _exact_input(p.probs if isinstance(p, PMF) else p)
    if dim is not None:
        if len(values) > dim:
            raise DimensionMismatch(f"input has {len(values)} components but dim is {dim}")
        values = _exact_input(list(values) + [0] * (dim - len(values)))
    if len(values) == 0:
        raise DimensionMismatch("empty input")
    e = _exact_eta(eta)
    return _substitute(values, 1 - e, e)


def inverse_exact(q, eta) -> list[fmpq]:
    """Exact inverse Bernoulli transform: P(w) = Q(1 - 1/eta + w/eta)."""
    values = _exact_input(q)
    if len(values) == 0:
        raise DimensionMismatch("empty input")
    e = _exact_eta(eta)
    return _substitute(values, 1 - 1 / e, 1 / e)


def exact_matrix(eta, dim: int) -> list[list[fmpq]]:
    """Bernoulli matrix entries as exact rationals (row m, column n)."""
    e = _exact_eta(eta)
    one_minus = 1 - e
    t = [[fmpq(0)] * dim for _ in range(dim)]
    for n in range(dim):
        for m in range(n + 1):
            t[m][n] = math.comb(n, m) * e**m * one_minus ** (n - m)
    return t
