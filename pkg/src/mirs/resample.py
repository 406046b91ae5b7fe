"""Replicate plans: delete-a-group jackknife and with-replacement bootstrap."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import DataMatrix
from .errors import ConfigurationError


class PlanKind(Enum):
    JACKKNIFE = "jackknife"
    BOOTSTRAP = "bootstrap"


@dataclass(frozen=True, eq=False)
class ReplicatePlan:
    """Row-index sets for each replicate.

    ``replicates[r]`` holds the rows of replicate r in sorted order: the
    retained rows for a jackknife, the n drawn rows (with repeats) for a
    bootstrap.  ``deleted`` holds the jackknife groups and is empty for a
    bootstrap.
    """

    kind: PlanKind
    n: int
    replicates: tuple
    deleted: tuple = ()

    @property
    def size(self) -> int:
        """G for a jackknife, B for a bootstrap."""
        return len(self.replicates)


def make_jackknife_plan(n: int, G: int, stream) -> ReplicatePlan:
    """Randomly partition rows 0..n-1 into G groups of size floor(n/G) or ceil(n/G)."""
    if not 2 <= G <= n:
        raise ConfigurationError(f"jackknife needs 2 <= G <= n, got G={G}, n={n}")
    perm = stream.permutation(n)
    groups = [np.sort(g) for g in np.array_split(perm, G)]
    everything = np.arange(n)
    retained = []
    for g in groups:
        keep = np.ones(n, dtype=bool)
        keep[g] = False
        retained.append(everything[keep])
    return ReplicatePlan(PlanKind.JACKKNIFE, n, tuple(retained), tuple(groups))


def make_bootstrap_plan(n: int, B: int, stream) -> ReplicatePlan:
    """B independent draws of n row indices, uniformly with replacement."""
    if n < 2 or B < 2:
        raise ConfigurationError(f"bootstrap needs n >= 2 and B >= 2, got n={n}, B={B}")
    draws = np.sort(stream.integers(0, n, size=(B, n)), axis=1)
    return ReplicatePlan(PlanKind.BOOTSTRAP, n, tuple(draws))


def make_plan(kind, n: int, size: int, stream) -> ReplicatePlan:
    kind = PlanKind(kind)
    if kind is PlanKind.JACKKNIFE:
        return make_jackknife_plan(n, size, stream)
    return make_bootstrap_plan(n, size, stream)


def materialize_replicate(data: DataMatrix, plan: ReplicatePlan, r: int) -> DataMatrix:
    """Replicate r as its own dataset; bootstrap repeats become distinct cases."""
    if data.n != plan.n:
        raise ConfigurationError(f"plan built for n={plan.n} rows, data has {data.n}")
    if not 0 <= r < plan.size:
        raise ConfigurationError(f"replicate index {r} outside [0, {plan.size})")
    return data.take(plan.replicates[r])
