"""Joint queue-length generating functions at polling epochs.

Queue contents at successive cycle starts form a multitype branching process
with immigration: a customer present when its queue is polled is replaced,
by the end of the cycle, by the customers that arrive during the work it
triggers (its service under gated service, its whole same-queue busy period
under exhaustive service), and arrivals during switch-over times immigrate.
The cycle-start GF is the infinite product of immigration GFs composed with
iterated offspring maps, truncated once the factors are indistinguishable
from 1.

Globally gated systems follow a different (class-level) branching structure
and are handled by the cycletime module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

from .distributions import BusyPeriod
from .errors import BadShapeError, DomainError, TruncationError
from .model import Aggregates, Discipline, SystemSpec, validate

#: stop multiplying product factors once they deviate from 1 by less than this
FACTOR_TOL = 1e-14
#: tail bound above which a capped product evaluation is reported as failed
TAIL_LIMIT = 1e-10
HARD_CAP = 1_000_000


class Epoch(enum.Enum):
    BEGIN = "begin"
    COMPLETE = "complete"


@dataclass
class PolEpochGf:
    """Evaluator for the joint queue-length GF at a polling epoch of one queue.

    terms_used / tail_bound reflect the most recent evaluation.
    """

    queue_index: int
    epoch: Epoch
    evaluator: Callable[[Sequence[complex]], complex]
    terms_used: int = 0
    tail_bound: float = 0.0
    _engine: "BranchingEngine" = field(default=None, repr=False)

    def evaluate(self, z: Sequence[complex]) -> complex:
        value = self.evaluator(z)
        if self._engine is not None:
            self.terms_used = self._engine.last_terms_used
            self.tail_bound = self._engine.last_tail_bound
        return value


class BranchingEngine:
    """All epoch GF evaluations for one validated gated/exhaustive system.

    Stateless apart from busy-period warm starts and the diagnostics of the
    latest product evaluation; instances may be shared across threads (a racy
    warm start only changes iteration counts, not values).
    """

    def __init__(self, system: SystemSpec, agg: Aggregates | None = None):
        if any(q.discipline is Discipline.GLOBALLY_GATED for q in system.queues):
            raise BadShapeError(
                "queue-level branching GFs are defined for gated/exhaustive systems; "
                "globally gated uses the class-level cycle machinery"
            )
        self.system = system
        self.agg = agg if agg is not None else validate(system)
        self.n = system.num_queues
        self.rates = self.agg.queue_rates
        self._busy = [
            BusyPeriod(self.agg.queue_services[i], self.rates[i])
            if q.discipline is Discipline.EXHAUSTIVE
            else None
            for i, q in enumerate(system.queues)
        ]
        rho = self.agg.load
        if rho <= 0.0:
            self.n_max = 50
        else:
            self.n_max = min(int(math.ceil(math.log(FACTOR_TOL) / math.log(rho))) + 50, HARD_CAP)
        self.last_terms_used = 0
        self.last_tail_bound = 0.0

    # -- building blocks ----------------------------------------------------

    def _weighted_gap(self, z: Sequence[complex]) -> complex:
        """Sum of rate_j * (1 - z_j) over all queues."""
        return sum(lam * (1.0 - zj) for lam, zj in zip(self.rates, z))

    def replacement(self, i: int, z: Sequence[complex]) -> complex:
        """GF of the population replacing one queue-i customer during a visit (0-based i)."""
        q = self.system.queues[i]
        if q.discipline is Discipline.GATED:
            return self.agg.queue_services[i].lst(self._weighted_gap(z))
        gap = sum(lam * (1.0 - zj) for j, (lam, zj) in enumerate(zip(self.rates, z)) if j != i)
        return self._busy[i].lst(gap)

    def offspring_vector(self, z: Sequence[complex]) -> list[complex]:
        """First-generation offspring map: per-queue replacement GFs with the
        later-visited queues' customers already replaced in turn."""
        work = list(z)
        for i in range(self.n - 1, -1, -1):
            work[i] = self.replacement(i, work)
        return work

    def offspring(self, i: int, z: Sequence[complex]) -> complex:
        return self.offspring_vector(z)[i]

    def immigration(self, z: Sequence[complex]) -> complex:
        """GF of the cycle-start population contributed by one cycle's switch-overs."""
        fvec = self.offspring_vector(z)
        direct = [lam * (1.0 - zj) for lam, zj in zip(self.rates, z)]
        grown = [lam * (1.0 - fj) for lam, fj in zip(self.rates, fvec)]
        out = 1.0 + 0.0j
        prefix = 0.0 + 0.0j
        suffix = sum(grown)
        for i in range(self.n):
            prefix += direct[i]
            suffix -= grown[i]
            out *= self.system.queues[i].switch_over.lst(prefix + suffix)
        return out

    # -- epoch GFs -----------------------------------------------------------

    def cycle_start(self, z: Sequence[complex]) -> complex:
        """Joint queue-length GF at the start of a cycle (visit beginning at queue 1)."""
        total_switch = self.agg.mean_switch_over
        rho = self.agg.load
        acc = 1.0 + 0.0j
        cur = list(z)
        for n in range(self.n_max):
            fac = self.immigration(cur)
            acc *= fac
            gap = abs(self._weighted_gap(cur))
            eps = max(abs(fac - 1.0), total_switch * gap * rho)
            if eps < FACTOR_TOL:
                self.last_terms_used = n + 1
                self.last_tail_bound = eps / max(1.0 - rho, 1e-16)
                return acc
            cur = self.offspring_vector(cur)
        self.last_terms_used = self.n_max
        self.last_tail_bound = abs(fac - 1.0) * rho / max(1.0 - rho, 1e-16)
        if self.last_tail_bound > TAIL_LIMIT:
            raise TruncationError(
                f"cycle-start product not converged after {self.n_max} factors "
                f"(tail bound {self.last_tail_bound:.2e}); load {rho:.6f} too close to 1"
            )
        return acc

    def visit_begin(self, i: int, z: Sequence[complex]) -> complex:
        """Joint GF at a visit beginning to queue i (0-based)."""
        w = list(z)
        acc = 1.0 + 0.0j
        for m in range(i - 1, -1, -1):
            acc *= self.system.queues[m].switch_over.lst(self._weighted_gap(w))
            w[m] = self.replacement(m, w)
        return self.cycle_start(w) * acc

    def visit_complete(self, i: int, z: Sequence[complex]) -> complex:
        """Joint GF at a visit completion to queue i (0-based)."""
        w = list(z)
        w[i] = self.replacement(i, z)
        return self.visit_begin(i, w)

    def epoch_gf(self, i: int, epoch: Epoch, z: Sequence[complex]) -> complex:
        if epoch is Epoch.BEGIN:
            return self.visit_begin(i, z)
        return self.visit_complete(i, z)

    def priority_epoch_gf(self, i: int, epoch: Epoch, z_prio: Sequence[complex]) -> complex:
        """Class-level joint GF: mark each waiting customer's class independently
        with probability rate_share, which turns class arguments into their
        rate-weighted queue-level average."""
        flat = list(z_prio)
        if len(flat) != sum(q.num_classes for q in self.system.queues):
            raise BadShapeError("class-level GF argument has the wrong length")
        args = []
        pos = 0
        for qi, q in enumerate(self.system.queues):
            block = flat[pos:pos + q.num_classes]
            pos += q.num_classes
            lam = self.rates[qi]
            if lam == 0.0:
                args.append(1.0 + 0.0j)
            else:
                args.append(sum(c.rate * zz for c, zz in zip(q.classes, block)) / lam)
        return self.epoch_gf(i, epoch, args)


@lru_cache(maxsize=64)
def engine_for(system: SystemSpec) -> BranchingEngine:
    return BranchingEngine(system)


def _check_vector(z: Sequence[complex], n: int) -> list[complex]:
    z = [complex(v) for v in z]
    if len(z) != n:
        raise BadShapeError(f"GF argument must have {n} entries, got {len(z)}")
    for v in z:
        if abs(v) > 1.0 + 1e-12:
            raise DomainError(f"GF argument {v} lies outside the closed unit disk")
    return z


# -- public operations -------------------------------------------------------

def offspring_gf(system: SystemSpec, i: int, z: Sequence[complex]) -> complex:
    """f-map component for queue i (1-based): the replacement GF after the
    downward recursion over queues visited later in the same cycle."""
    eng = engine_for(system)
    return eng.offspring(i - 1, _check_vector(z, eng.n))


def immigration_gf(system: SystemSpec, z: Sequence[complex]) -> complex:
    eng = engine_for(system)
    return eng.immigration(_check_vector(z, eng.n))


def cycle_start_gf(system: SystemSpec, z: Sequence[complex]) -> complex:
    eng = engine_for(system)
    return eng.cycle_start(_check_vector(z, eng.n))


def visit_gf(system: SystemSpec, i: int, epoch: Epoch, z: Sequence[complex]) -> complex:
    eng = engine_for(system)
    return eng.epoch_gf(i - 1, epoch, _check_vector(z, eng.n))


def priority_visit_gf(system: SystemSpec, i: int, epoch: Epoch, z_prio: Sequence[complex]) -> complex:
    eng = engine_for(system)
    total_classes = sum(q.num_classes for q in system.queues)
    return eng.priority_epoch_gf(i - 1, epoch, _check_vector(z_prio, total_classes))


def polling_epoch_gf(system: SystemSpec, i: int, epoch: Epoch) -> PolEpochGf:
    """Reusable epoch-GF evaluator carrying truncation diagnostics."""
    eng = engine_for(system)
    return PolEpochGf(
        queue_index=i,
        epoch=epoch,
        evaluator=lambda z: eng.epoch_gf(i - 1, epoch, _check_vector(z, eng.n)),
        _engine=eng,
    )
