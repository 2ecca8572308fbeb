"""Domain types for a cyclic polling system with priority classes.

A system is a cyclic list of queues; each queue has a service discipline, a
switch-over time that the server incurs after leaving it, and an ordered list
of priority classes (index 1 is served first).  Specs are immutable after
construction and safe to share; validation returns the derived aggregates
(per-queue rates, load shares, mean cycle time).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .distributions import Distribution, distribution_from_config, mixture_of
from .errors import BadShapeError, UnstableError, ZeroSwitchoverError

#: Loads above 1 - STABILITY_MARGIN are rejected: infinite-product truncation
#: and mean cycle times blow up as the load approaches capacity.
STABILITY_MARGIN = 1e-9


class Discipline(enum.Enum):
    GATED = "gated"
    EXHAUSTIVE = "exhaustive"
    GLOBALLY_GATED = "globally_gated"


class Preemption(enum.Enum):
    NONPREEMPTIVE = "nonpreemptive"
    PREEMPTIVE_RESUME = "preemptive_resume"


@dataclass(frozen=True)
class PriorityClassSpec:
    """One priority class: Poisson arrivals at `rate`, i.i.d. `service` times."""

    rate: float
    service: Distribution


@dataclass(frozen=True)
class QueueSpec:
    discipline: Discipline
    classes: tuple[PriorityClassSpec, ...]
    switch_over: Distribution
    preemption: Preemption = Preemption.NONPREEMPTIVE

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def total_rate(self) -> float:
        return sum(c.rate for c in self.classes)


@dataclass(frozen=True)
class SystemSpec:
    queues: tuple[QueueSpec, ...]

    @property
    def num_queues(self) -> int:
        return len(self.queues)

    def class_pairs(self) -> list[tuple[int, int]]:
        """All (queue, class) index pairs, 1-based, in service order."""
        return [(i, k) for i in range(1, len(self.queues) + 1)
                for k in range(1, len(self.queues[i - 1].classes) + 1)]


@dataclass(frozen=True)
class Aggregates:
    """Derived per-queue and system-level quantities of a validated system."""

    queue_rates: tuple[float, ...]            # total arrival rate per queue
    queue_services: tuple[Distribution, ...]  # rate-weighted service mixture per queue
    queue_loads: tuple[float, ...]            # load share per queue
    class_loads: tuple[tuple[float, ...], ...]
    load: float                                # total load
    mean_switch_over: float                    # E(S), summed over queues
    switch_second_moment: float                # E(S^2) of the summed switch-over
    mean_cycle: float                          # E(S) / (1 - load)
    mean_intervisit: tuple[float, ...]         # (1 - load_i) * mean_cycle

    def mean_visit(self, i: int) -> float:
        return self.queue_loads[i - 1] * self.mean_cycle


def _check_shape(system: SystemSpec) -> None:
    if not isinstance(system, SystemSpec) or not system.queues:
        raise BadShapeError("system needs at least one queue")
    gg = [q.discipline is Discipline.GLOBALLY_GATED for q in system.queues]
    if any(gg) and not all(gg):
        raise BadShapeError("globally gated applies to all queues or none")
    for n, q in enumerate(system.queues, start=1):
        if not q.classes:
            raise BadShapeError(f"queue {n} has no priority classes")
        if q.preemption is Preemption.PREEMPTIVE_RESUME and q.discipline is not Discipline.EXHAUSTIVE:
            raise BadShapeError(f"queue {n}: preemptive resume is only defined for exhaustive service")
        for k, cls in enumerate(q.classes, start=1):
            if cls.rate < 0:
                raise BadShapeError(f"queue {n} class {k}: negative arrival rate {cls.rate}")


@lru_cache(maxsize=256)
def _aggregates(system: SystemSpec) -> Aggregates:
    rates, services, qloads, closs = [], [], [], []
    for q in system.queues:
        lam = q.total_rate()
        rates.append(lam)
        loads = tuple(c.rate * c.service.mean() for c in q.classes)
        closs.append(loads)
        qloads.append(sum(loads))
        if lam > 0:
            services.append(mixture_of([(c.rate / lam, c.service) for c in q.classes]))
        else:
            services.append(q.classes[0].service)
    load = sum(qloads)
    mean_s = sum(q.switch_over.mean() for q in system.queues)
    var_s = sum(q.switch_over.variance() for q in system.queues)
    second_s = var_s + mean_s * mean_s
    mean_cycle = mean_s / (1.0 - load) if load < 1.0 else float("inf")
    return Aggregates(
        queue_rates=tuple(rates),
        queue_services=tuple(services),
        queue_loads=tuple(qloads),
        class_loads=tuple(closs),
        load=load,
        mean_switch_over=mean_s,
        switch_second_moment=second_s,
        mean_cycle=mean_cycle,
        mean_intervisit=tuple((1.0 - r) * mean_cycle for r in qloads),
    )


def validate(system: SystemSpec, analytic: bool = True) -> Aggregates:
    """Check a system spec and return its derived aggregates.

    With analytic=True (the default) the stability condition and a positive
    total mean switch-over time are required; the simulator passes
    analytic=False since it can observe unstable or zero-switch-over systems.
    """
    _check_shape(system)
    agg = _aggregates(system)
    if analytic:
        if agg.load > 1.0 - STABILITY_MARGIN:
            raise UnstableError(
                f"total load {agg.load:.9f} is at or above capacity; no steady state"
            )
        if agg.mean_switch_over <= 0.0:
            raise ZeroSwitchoverError(
                "analytic engine requires a positive total mean switch-over time"
            )
    return agg


_DISCIPLINES = {d.value: d for d in Discipline}
_PREEMPTIONS = {p.value: p for p in Preemption}


def system_from_config(cfg: dict) -> SystemSpec:
    """Build a system from its JSON-style description.

    Schema: {"queues": [{"discipline": ..., "preemption": ... (optional),
    "switch_over": {distribution}, "classes": [{"rate": r, "service":
    {distribution}}, ...]}, ...]}.  Class order is priority order, first
    entry served first.
    """
    if not isinstance(cfg, dict) or "queues" not in cfg or not isinstance(cfg["queues"], list):
        raise BadShapeError("config must be an object with a 'queues' list")
    queues = []
    for n, qc in enumerate(cfg["queues"], start=1):
        try:
            disc = _DISCIPLINES[qc["discipline"]]
        except KeyError:
            raise BadShapeError(
                f"queue {n}: 'discipline' must be one of {sorted(_DISCIPLINES)}"
            ) from None
        preempt = Preemption.NONPREEMPTIVE
        if "preemption" in qc:
            try:
                preempt = _PREEMPTIONS[qc["preemption"]]
            except KeyError:
                raise BadShapeError(
                    f"queue {n}: 'preemption' must be one of {sorted(_PREEMPTIONS)}"
                ) from None
        try:
            switch = distribution_from_config(qc["switch_over"])
            classes = tuple(
                PriorityClassSpec(float(cc["rate"]), distribution_from_config(cc["service"]))
                for cc in qc["classes"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadShapeError(f"queue {n}: {exc}") from exc
        queues.append(QueueSpec(disc, classes, switch, preempt))
    return SystemSpec(tuple(queues))


def load_system(path: str | Path) -> SystemSpec:
    """Read a system from a JSON config file."""
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BadShapeError(f"config is not valid JSON: {exc}") from exc
    return system_from_config(cfg)
