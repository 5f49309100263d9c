"""Geometry of the probability simplices under the Bernoulli map.

Valid photon-number vectors fill the standard simplex; their images under
T fill a smaller simplex (the Q-simplex) whose vertices are the columns of
T. A normalized photocount vector lies on the same hyperplane but not
necessarily inside the Q-simplex, in which case its reconstruction has
coordinates outside [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import PMF, Origin
from .errors import DimensionMismatch, NotNormalized
from .transform import TransformSpec, build_matrix, inverse_via_solve

EPS_GEO = 1e-10
EPS_SUM = 1e-9


@dataclass(frozen=True)
class Violation:
    index: int
    value: float


@dataclass(frozen=True, eq=False)
class SimplexCheck:
    """Membership of q in the Q-simplex.

    ``barycentric`` holds the coordinates of q in the basis of the simplex
    vertices, which is exactly the reconstructed P.
    """

    inside: bool
    barycentric: np.ndarray
    violations: tuple[Violation, ...]

    def to_dict(self) -> dict:
        return {
            "inside": self.inside,
            "barycentric": [float(x) for x in self.barycentric],
            "violations": [{"index": v.index, "value": v.value} for v in self.violations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        lines = ["index,barycentric,violation"]
        bad = {v.index for v in self.violations}
        for i, x in enumerate(self.barycentric):
            lines.append(f"{i},{float(x)!r},{str(i in bad).lower()}")
        return "\n".join(lines) + "\n"


def vertices(spec: TransformSpec) -> list[PMF]:
    """Columns of T: the image of each pure photon-number state."""
    t = build_matrix(spec).entries
    return [PMF(t[:, n].copy(), origin=Origin.ANALYTIC) for n in range(spec.dim)]


def vertices_csv(spec: TransformSpec) -> str:
    header = ["eta", "vertex"] + [f"q{m}" for m in range(spec.dim)]
    lines = [",".join(header)]
    for n, v in enumerate(vertices(spec)):
        lines.append(",".join([repr(spec.eta), str(n)] + [repr(float(x)) for x in v.probs]))
    return "\n".join(lines) + "\n"


def contains(q: Sequence[float], spec: TransformSpec) -> SimplexCheck:
    """Test whether a normalized photocount vector lies in the Q-simplex.

    Raises:
        DimensionMismatch: ``len(q) != spec.dim``.
        NotNormalized: ``sum(q)`` differs from one by more than 1e-9.
    """
    values = q.probs if isinstance(q, PMF) else np.asarray(q, dtype=float)
    if values.size != spec.dim:
        raise DimensionMismatch(f"q has {values.size} components but dim is {spec.dim}")
    total = math.fsum(values)
    if abs(total - 1.0) > EPS_SUM:
        raise NotNormalized(f"q sums to {total!r}")
    bary = inverse_via_solve(values, spec).values
    violations = tuple(
        Violation(i, float(x))
        for i, x in enumerate(bary)
        if not (-EPS_GEO <= x <= 1.0 + EPS_GEO)
    )
    return SimplexCheck(not violations, bary, violations)


def contraction_ratio(spec: TransformSpec) -> float:
    """det T = prod_k eta^k = eta^(dim (dim - 1) / 2); one only at eta = 1."""
    return spec.eta ** (spec.dim * (spec.dim - 1) // 2)
