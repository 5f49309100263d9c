"""Monte Carlo photodetection with per-photon Bernoulli loss.

Each trial draws a photon number n from P and registers m ~ Binomial(n, eta)
photocounts (binomial thinning). Both draws use inverse-CDF sampling from
precomputed tables, so no normal or Poisson approximations enter.

Random streams: trials are grouped in fixed blocks of ``BLOCK_SIZE``; block
b draws from a Philox counter-based generator keyed by the seed with b in
the high word of the counter. A block's draws depend only on (seed, b),
so results do not depend on how blocks are scheduled across workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import PMF, Origin, as_pmf
from .errors import DimensionMismatch, InvalidParameter
from .transform import TransformSpec, build_matrix, forward, inverse

BLOCK_SIZE = 1 << 16
SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class SimulationRun:
    seed: int
    samples: int
    eta: float
    counts: np.ndarray
    empirical_q: PMF
    l1_to_analytic: float | None = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "eta": self.eta,
            "counts": [int(c) for c in self.counts],
            "empirical_q": self.empirical_q.to_dict(),
            "l1_to_analytic": self.l1_to_analytic,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        return self.empirical_q.to_csv()


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of trials."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, block]))


class _Tables:
    """Inverse-CDF tables for the photon number and for every Binomial(n, eta).

    The binomial CDFs are stored back to back, row n shifted by +n, so a
    single ``searchsorted`` on ``n + u`` lands inside row n.
    """

    def __init__(self, probs: np.ndarray, eta: float):
        cdf = np.cumsum(probs)
        self.photon_cdf = np.minimum(cdf / cdf[-1], 1.0)
        self.photon_cdf[-1] = 1.0
        dim = probs.size
        t = build_matrix(TransformSpec(eta, dim)).entries
        rows, starts = [], np.empty(dim, dtype=np.int64)
        offset = 0
        for n in range(dim):
            c = np.minimum(np.cumsum(t[: n + 1, n]), 1.0)
            c[-1] = 1.0
            rows.append(c + n)
            starts[n] = offset
            offset += n + 1
        self.flat = np.concatenate(rows)
        self.starts = starts

    def sample(self, u: np.ndarray) -> np.ndarray:
        n = np.searchsorted(self.photon_cdf, u[:, 0], side="right")
        pos = np.searchsorted(self.flat, n + u[:, 1], side="right")
        return pos - self.starts[n]


def _block_counts(tables: _Tables, seed: int, block: int, size: int) -> np.ndarray:
    u = block_generator(seed, block).random((size, 2))
    return np.bincount(tables.sample(u))


def simulate(
    p: PMF,
    eta: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> SimulationRun:
    """Simulate ``samples`` detection windows.

    Args:
        p: Photon-number distribution. A nonzero ``tail_mass`` is ignored:
            sampling uses the retained components renormalized.
        eta: Detection efficiency in (0, 1].
        samples: Number of trials, at least one.
        seed: Unsigned 64-bit seed.
        workers: Threads used to process blocks; does not change the result.

    Returns:
        A :class:`SimulationRun` whose histogram length is the largest
        observed count plus one.
    """
    p = as_pmf(p)
    if not (0.0 < eta <= 1.0):
        raise InvalidParameter(f"eta must lie in (0, 1], got {eta!r}")
    if int(samples) != samples or samples < 1:
        raise InvalidParameter(f"samples must be a positive integer, got {samples!r}")
    if not (0 <= int(seed) <= SEED_MAX):
        raise InvalidParameter("seed must be an unsigned 64-bit integer")
    samples, seed = int(samples), int(seed)

    tables = _Tables(np.asarray(p.probs, dtype=float), eta)
    n_blocks = -(-samples // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, samples - b * BLOCK_SIZE) for b in range(n_blocks)]
    jobs = [(b, s) for b, s in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _block_counts(tables, seed, *j), jobs))
    else:
        parts = [_block_counts(tables, seed, b, s) for b, s in jobs]

    counts = np.zeros(max(part.size for part in parts), dtype=np.int64)
    for part in parts:
        counts[: part.size] += part
    empirical = PMF(counts / samples, origin=Origin.EMPIRICAL)

    analytic = forward(p, TransformSpec(eta, len(p))).probs
    dim = max(analytic.size, counts.size)
    diff = np.zeros(dim)
    diff[: analytic.size] += analytic
    diff[: counts.size] -= empirical.probs
    l1 = math.fsum(np.abs(diff))
    return SimulationRun(seed, samples, float(eta), counts, empirical, l1)


def reconstruction_error(
    p_true: PMF,
    run: SimulationRun,
    spec: TransformSpec | None = None,
    n_max: int | None = None,
) -> float:
    """L1 distance between the inverse of the empirical histogram and ``p_true``.

    Indices 0..n_max are compared (default: the support of ``p_true``).
    The inversion runs at ``spec.dim`` components, which must cover both the
    histogram and the compared indices. Non-finite reconstructions give inf.
    """
    p_true = as_pmf(p_true)
    q = run.empirical_q.probs
    k = len(p_true) if n_max is None else n_max + 1
    if spec is None:
        spec = TransformSpec(run.eta, max(q.size, len(p_true), k))
    if q.size > spec.dim or k > spec.dim:
        raise DimensionMismatch(
            f"dim {spec.dim} cannot hold histogram length {q.size} and {k} compared indices"
        )
    recon = inverse(q, spec).values[:k]
    truth = p_true.padded(max(len(p_true), k))[:k]
    if not np.all(np.isfinite(recon)):
        return math.inf
    return math.fsum(np.abs(recon - truth))
