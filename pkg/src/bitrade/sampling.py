"""Seeded, zone-stratified random instances for sweeps and differential tests."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, PriceState
from .zones import NONDEGENERATE_ZONES, Boundary, Zone, _raw_label, classify

DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "Y1": (0.2, 5.0), "Y2": (0.2, 5.0), "q1": (0.2, 5.0), "q2": (0.2, 5.0),
    "rho": (0.05, 2.0), "p1": (0.05, 4.0), "p2": (0.05, 4.0),
}

_KEYS = ("Y1", "Y2", "q1", "q2", "rho", "p1", "p2")


@dataclass(frozen=True)
class Instance:
    params: ModelParams
    prices: PriceState
    zone: Zone


def _oriented_instance(row: np.ndarray) -> Instance | None:
    Y1, Y2, q1, q2, rho, p1, p2 = (float(x) for x in row)
    params = ModelParams(Y1, Y2, q1, q2, rho)
    prices = PriceState(p1, p2)
    if _raw_label(prices, params) is not Zone.III and p2 * q2 > p1 * q1:
        params, prices = params.swapped(), prices.swapped()
    label = classify(prices, params)
    if isinstance(label, Boundary):
        return None
    return Instance(params, prices, label)


def stratified_instances(draws: int, seed: int = 0,
                         ranges: dict[str, tuple[float, float]] | None = None,
                         labels: tuple[Zone, ...] = NONDEGENERATE_ZONES,
                         max_candidates_factor: int = 1000,
                         batch: int = 4096) -> tuple[list[Instance], Counter]:
    """Draw ``draws`` instances with roughly equal counts per zone label.

    Candidates are uniform over ``ranges`` (regions relabelled so the
    ``p2 q2 < p1 q1`` orientation holds) and accepted while their label is
    under its quota ``draws // len(labels)``.  Labels that stay rare after
    ``max_candidates_factor * draws`` candidates leave their slots to free
    draws.  The result depends only on the arguments.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    ranges = {**DEFAULT_RANGES, **(ranges or {})}
    lo = np.array([ranges[k][0] for k in _KEYS])
    hi = np.array([ranges[k][1] for k in _KEYS])
    rng = np.random.Generator(np.random.Philox(key=seed))
    quota = draws // len(labels)
    counts: Counter = Counter()
    accepted: list[Instance] = []
    spill: list[Instance] = []
    seen = 0
    budget = max_candidates_factor * draws
    while len(accepted) < draws and seen < budget:
        rows = lo + (hi - lo) * rng.random((batch, len(_KEYS)))
        for row in rows:
            seen += 1
            inst = _oriented_instance(row)
            if inst is None or inst.zone not in labels:
                continue
            if counts[inst.zone] < quota:
                counts[inst.zone] += 1
                accepted.append(inst)
                if len(accepted) == draws:
                    break
            elif len(spill) < draws:
                spill.append(inst)
        if all(counts[z] >= quota for z in labels):
            # every stratum is full; top up with whatever comes next
            quota = draws
    for inst in spill:
        if len(accepted) == draws:
            break
        counts[inst.zone] += 1
        accepted.append(inst)
    return accepted, counts
