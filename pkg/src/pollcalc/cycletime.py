"""Cycle-time, intervisit-time and globally gated transforms.

The cycle starting at a visit epoch of one queue is assembled from the epoch
GF and per-queue load maps w -> w + rate*(1 - theta(w)), where theta is the
transform of the time one waiting customer keeps the server at its queue
(its service under gated service, its busy period under exhaustive service).
Chains of these maps, walked backwards around the ring, account for the work
that arrivals at later-visited queues inject into the same cycle.

Globally gated systems close all gates at the start of the cycle; their
cycle transform is an infinite product over an iterated per-cycle load map,
and the class-level cycle-start GF is a plain substitution into it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .branching import FACTOR_TOL, HARD_CAP, TAIL_LIMIT, BranchingEngine, engine_for
from .errors import BadShapeError, FormMismatchError, RouteMismatchError, TruncationError
from .model import Discipline, SystemSpec, validate

#: absolute tolerance for the two intervisit evaluation routes
ROUTE_TOL = 1e-8


class CycleEngine:
    """Cycle and intervisit transforms for a gated/exhaustive system."""

    def __init__(self, branching: BranchingEngine):
        self.b = branching
        self.system = branching.system
        self.agg = branching.agg
        self.n = branching.n

    def theta(self, i: int, w: complex) -> complex:
        """Transform of the server time at queue i caused by one waiting customer."""
        if self.system.queues[i].discipline is Discipline.GATED:
            return self.agg.queue_services[i].lst(w)
        return self.b._busy[i].lst(w)

    def load_map(self, i: int, w: complex) -> complex:
        return w + self.agg.queue_rates[i] * (1.0 - self.theta(i, w))

    def chain(self, i: int, j: int, w: complex) -> complex:
        """Load maps applied for queues j, j-1, ..., i+1 (cyclic, 0-based);
        empty when i == j."""
        steps = (j - i) % self.n
        idx = j
        for _ in range(steps):
            w = self.load_map(idx, w)
            idx = (idx - 1) % self.n
        return w

    def chain_full(self, j: int, w: complex) -> complex:
        """All N load maps, starting at queue j and walking backwards."""
        idx = j
        for _ in range(self.n):
            w = self.load_map(idx, w)
            idx = (idx - 1) % self.n
        return w

    def cycle_begin(self, j: int, w: complex) -> complex:
        """Transform of the cycle time starting at a visit beginning to queue j (0-based)."""
        anchor = (j - 1) % self.n
        acc = 1.0 + 0.0j
        args = []
        for i in range(self.n):
            chained = self.chain(i, anchor, w)
            acc *= self.system.queues[i].switch_over.lst(chained)
            args.append(self.theta(i, chained))
        return acc * self.b.visit_begin(j, args)

    def cycle_complete(self, j: int, w: complex) -> complex:
        """Transform of the cycle time between successive visit completions at queue j."""
        acc = 1.0 + 0.0j
        args = []
        for i in range(self.n):
            chained = self.chain(i, j, w)
            starred = self.chain_full(j, w) if i == j else chained
            acc *= self.system.queues[i].switch_over.lst(starred)
            args.append(self.theta(i, chained))
        return acc * self.b.visit_complete(j, args)

    def intervisit(self, i: int, w: complex, check_routes: bool = True) -> complex:
        """Transform of the intervisit period of exhaustive queue i (0-based).

        Primary route: the visit-beginning GF evaluated at 1 - w/rate (those
        customers are exactly the arrivals of the preceding intervisit
        period).  Cross-check route: the completion-to-completion cycle
        transform at w - rate*(1 - service(w)), evaluated whenever that
        argument stays in the transform domain.
        """
        if self.system.queues[i].discipline is not Discipline.EXHAUSTIVE:
            raise BadShapeError("intervisit transform is defined for exhaustive queues")
        lam = self.agg.queue_rates[i]
        shifted = w - lam * (1.0 - self.agg.queue_services[i].lst(w)) if lam > 0 else w
        if lam == 0.0:
            # no customers: the intervisit period is the whole completion cycle
            return self.cycle_complete(i, w)
        z = [1.0 + 0.0j] * self.n
        z[i] = 1.0 - w / lam
        value = self.b.visit_begin(i, z)
        if check_routes and shifted.real >= 0.0:
            alt = self.cycle_complete(i, shifted)
            if abs(alt - value) > ROUTE_TOL:
                raise RouteMismatchError(
                    f"intervisit routes disagree by {abs(alt - value):.3e} at w={w}"
                )
        return value


@lru_cache(maxsize=64)
def _cycle_engine(system: SystemSpec) -> CycleEngine:
    return CycleEngine(engine_for(system))


class GloballyGatedEngine:
    """Cycle transform and class-level cycle-start GF for globally gated systems."""

    def __init__(self, system: SystemSpec):
        if any(q.discipline is not Discipline.GLOBALLY_GATED for q in system.queues):
            raise BadShapeError("engine requires every queue globally gated")
        self.system = system
        self.agg = validate(system)
        self.class_rates = [c.rate for q in system.queues for c in q.classes]
        self.class_services = [c.service for q in system.queues for c in q.classes]
        rho = self.agg.load
        if rho <= 0.0:
            self.n_max = 50
        else:
            self.n_max = min(int(math.ceil(math.log(FACTOR_TOL) / math.log(rho))) + 50, HARD_CAP)

    def per_cycle_load(self, w: complex) -> complex:
        """One cycle of deferral: total arrival work transform gap at w."""
        return sum(
            lam * (1.0 - dist.lst(w))
            for lam, dist in zip(self.class_rates, self.class_services)
        )

    def switch_product(self, w: complex) -> complex:
        out = 1.0 + 0.0j
        for q in self.system.queues:
            out *= q.switch_over.lst(w)
        return out

    def cycle(self, w: complex, _verify: bool = True) -> complex:
        """Cycle-time transform (cycle anchored at the gate, queue 1)."""
        acc = 1.0 + 0.0j
        cur = complex(w)
        mean_s = self.agg.mean_switch_over
        rho = self.agg.load
        for n in range(self.n_max):
            fac = self.switch_product(cur)
            acc *= fac
            eps = max(abs(fac - 1.0), mean_s * abs(cur) * rho)
            if eps < FACTOR_TOL:
                break
            cur = self.per_cycle_load(cur)
        else:
            tail = abs(fac - 1.0) * rho / max(1.0 - rho, 1e-16)
            if tail > TAIL_LIMIT:
                raise TruncationError(
                    f"globally gated cycle product not converged after {self.n_max} "
                    f"factors (tail bound {tail:.2e})"
                )
        if _verify:
            recursed = self.switch_product(w) * self.cycle(self.per_cycle_load(w), _verify=False)
            if abs(recursed - acc) > 1e-10:
                raise FormMismatchError(
                    f"globally gated cycle functional equation violated by {abs(recursed - acc):.3e}"
                )
        return acc

    def cycle_start_gf(self, z_classes: Sequence[complex]) -> complex:
        """Class-level joint queue-length GF at the cycle start, evaluated as the
        immigration-offspring product over the flattened class space."""
        if len(z_classes) != len(self.class_rates):
            raise BadShapeError("class-level GF argument has the wrong length")
        work = [complex(z) for z in z_classes]
        acc = 1.0 + 0.0j
        mean_s = self.agg.mean_switch_over
        rho = self.agg.load
        for _ in range(self.n_max):
            gap = sum(lam * (1.0 - zz) for lam, zz in zip(self.class_rates, work))
            fac = self.switch_product(gap)
            acc *= fac
            eps = max(abs(fac - 1.0), mean_s * abs(gap) * rho)
            if eps < FACTOR_TOL:
                return acc
            work = [dist.lst(gap) for dist in self.class_services]
        tail = abs(fac - 1.0) * rho / max(1.0 - rho, 1e-16)
        if tail > TAIL_LIMIT:
            raise TruncationError(
                f"globally gated cycle-start product not converged (tail {tail:.2e})"
            )
        return acc


@lru_cache(maxsize=64)
def _gg_engine(system: SystemSpec) -> GloballyGatedEngine:
    return GloballyGatedEngine(system)


# -- public operations -------------------------------------------------------

def cycle_lst_begin(system: SystemSpec, j: int, w: complex) -> complex:
    """Cycle-time transform, cycle anchored at a visit beginning to queue j (1-based)."""
    return _cycle_engine(system).cycle_begin(j - 1, complex(w))


def cycle_lst_complete(system: SystemSpec, j: int, w: complex) -> complex:
    """Cycle-time transform, cycle anchored at a visit completion to queue j (1-based)."""
    return _cycle_engine(system).cycle_complete(j - 1, complex(w))


def intervisit_lst(system: SystemSpec, i: int, w: complex, check_routes: bool = True) -> complex:
    """Intervisit-period transform of exhaustive queue i (1-based)."""
    return _cycle_engine(system).intervisit(i - 1, complex(w), check_routes)


def globally_gated_cycle_lst(system: SystemSpec, w: complex) -> complex:
    return _gg_engine(system).cycle(complex(w))


def gg_cycle_start_gf(system: SystemSpec, z_classes: Sequence[complex]) -> complex:
    return _gg_engine(system).cycle_start_gf(z_classes)
