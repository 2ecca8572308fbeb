"""Shared system builders for the test suite."""

import numpy as np

from pollcalc.distributions import (
    Deterministic,
    Erlang,
    Exponential,
    HyperExponential,
)
from pollcalc.model import (
    Discipline,
    Preemption,
    PriorityClassSpec,
    QueueSpec,
    SystemSpec,
)


def two_queue_system(
    discipline=Discipline.GATED,
    disciplines=None,
    q1_classes=None,
    preemption=Preemption.NONPREEMPTIVE,
):
    """The running two-queue example: rates 0.6/0.2, unit-mean exponential
    service, unit-mean exponential switch-overs (load 0.8, mean cycle 10)."""
    if disciplines is None:
        disciplines = (discipline, discipline)
    if q1_classes is None:
        q1_classes = (PriorityClassSpec(0.6, Exponential(1.0)),)
    return SystemSpec(
        (
            QueueSpec(disciplines[0], tuple(q1_classes), Exponential(1.0), preemption),
            QueueSpec(
                disciplines[1],
                (PriorityClassSpec(0.2, Exponential(1.0)),),
                Exponential(1.0),
            ),
        )
    )


def symmetric_system(n_queues, discipline, total_rate=0.8, total_switch=2.0):
    """n identical queues, Exp(1) service, deterministic switch-overs."""
    queue = QueueSpec(
        discipline,
        (PriorityClassSpec(total_rate / n_queues, Exponential(1.0)),),
        Deterministic(total_switch / n_queues),
    )
    return SystemSpec((queue,) * n_queues)


def random_system(rng, discipline, max_queues=4, max_classes=3, max_load=0.9):
    """A randomized valid system for property tests, all queues one discipline."""
    n = int(rng.integers(1, max_queues + 1))
    target_load = float(rng.uniform(0.2, max_load))
    shares = rng.dirichlet(np.ones(n)) * target_load
    queues = []
    for i in range(n):
        k = int(rng.integers(1, max_classes + 1))
        class_shares = rng.dirichlet(np.ones(k)) * shares[i]
        classes = []
        for share in class_shares:
            dist = _random_service(rng)
            classes.append(PriorityClassSpec(share / dist.mean(), dist))
        switch = _random_switch(rng)
        queues.append(QueueSpec(discipline, tuple(classes), switch))
    return SystemSpec(tuple(queues))


def _random_service(rng):
    kind = rng.integers(0, 4)
    if kind == 0:
        return Exponential(float(rng.uniform(0.5, 3.0)))
    if kind == 1:
        return Deterministic(float(rng.uniform(0.2, 2.0)))
    if kind == 2:
        return Erlang(int(rng.integers(1, 4)), float(rng.uniform(0.5, 3.0)))
    w = float(rng.uniform(0.2, 0.8))
    return HyperExponential((w, 1.0 - w), (float(rng.uniform(0.5, 2.0)), float(rng.uniform(2.0, 6.0))))


def _random_switch(rng):
    kind = rng.integers(0, 3)
    scale = float(rng.uniform(0.3, 2.0))
    if kind == 0:
        return Exponential(1.0 / scale)
    if kind == 1:
        return Deterministic(scale)
    return Erlang(2, 2.0 / scale)
