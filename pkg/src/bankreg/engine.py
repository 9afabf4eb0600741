"""Deterministic cycle loop tying together cores, the regulation unit and the LLC banks.

Per cycle, in this order:

1. ``Regulator.tick``.
2. Every core tops up its proposals.
3. Per bank, a round-robin arbiter picks one proposal among cores whose
   channel is not held by the regulator, scanning core ids from the one after
   the bank's last grant.  A bank with a full queue accepts nothing.
4. The picked requests are presented to the regulator in ascending
   ``(core, bank)`` order; each admitted one is enqueued and counted.
5. Banks service their queue heads; completions due this cycle are delivered.
6. Per-core statistics.

Step 3 consults the counters as they stood at the start of the cycle; step 4
re-checks them as they change, which only matters for the bank-oblivious
policy when one domain wins several banks in the same cycle.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from bankreg.address_map import BankMapConfig, PartitionConfig, Region
from bankreg.memory import Bank, LlcConfig
from bankreg.regulator import (
    Policy,
    Regulator,
    RegulatorConfig,
    abr_offset,
    dar_offset,
    rer_offset,
    RPR_OFFSET,
)
from bankreg.workloads import CoreModel, WorkloadSpec

_EMPTY = ()


@dataclass(frozen=True)
class CoreSpec:
    core_id: int
    workload: WorkloadSpec = WorkloadSpec()
    domain: int = 0
    regulated: bool = False
    region: str = "victim"
    offset: int = 0
    max_outstanding: Optional[int] = None
    enabled: bool = True


@dataclass(frozen=True)
class Scenario:
    llc: LlcConfig = LlcConfig()
    bank_map: BankMapConfig = BankMapConfig()
    partition: PartitionConfig = PartitionConfig()
    policy: Policy = Policy.UNREGULATED
    regulation_period: int = 400
    access_budget: tuple = (0, 0)
    transaction_size: int = 16
    clock_hz: int = 1_000_000_000
    cores: tuple = ()
    max_cycles: int = 10_000_000
    seed: int = 1
    measured_core: Optional[int] = None
    name: str = "scenario"

    @property
    def num_cores(self) -> int:
        return max((c.core_id for c in self.cores), default=-1) + 1

    @property
    def num_domains(self) -> int:
        return len(self.access_budget)

    def regulator_config(self) -> RegulatorConfig:
        return RegulatorConfig(
            policy=self.policy,
            regulation_period=self.regulation_period,
            num_domains=self.num_domains,
            num_cores=max(self.num_cores, 1),
            num_banks=self.llc.num_banks,
            access_budget=tuple(self.access_budget),
            transaction_size=self.transaction_size,
            clock_hz=self.clock_hz,
        )

    def core(self, core_id: int) -> CoreSpec:
        for c in self.cores:
            if c.core_id == core_id:
                return c
        raise KeyError(f"no core {core_id} in scenario")

    def core_region(self, spec: CoreSpec) -> Region:
        part = self.partition.region(spec.region)
        return Region(part.base + spec.offset, part.limit)

    def validate(self):
        if self.llc.num_banks != self.bank_map.num_banks:
            raise ValueError(
                f"llc.num_banks={self.llc.num_banks} disagrees with bank_map.num_banks={self.bank_map.num_banks}"
            )
        ids = [c.core_id for c in self.cores]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate core ids in {ids}")
        for c in self.cores:
            if not 0 <= c.domain < self.num_domains:
                raise ValueError(f"core {c.core_id}: domain {c.domain} >= num_domains {self.num_domains}")
            if c.offset < 0 or c.offset >= self.partition.region(c.region).size:
                raise ValueError(f"core {c.core_id}: offset {c.offset:#x} outside region {c.region}")
            tb = c.workload.target_bank
            if tb is not None and not 0 <= tb < self.llc.num_banks:
                raise ValueError(f"core {c.core_id}: target_bank {tb} >= num_banks {self.llc.num_banks}")
        if self.measured_core is not None and self.measured_core not in ids:
            raise ValueError(f"measured_core {self.measured_core} is not a declared core")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        self.regulator_config()
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = self.policy.value
        d["access_budget"] = list(self.access_budget)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class CoreResult:
    core_id: int
    domain: int
    completed: int = 0
    accepted: int = 0
    stall_cycles_regulatory: int = 0
    stall_cycles_structural: int = 0
    finished: bool = False
    finish_cycle: Optional[int] = None
    bytes_read: int = 0
    bytes_written: int = 0


@dataclass
class CycleTrace:
    period_index: int
    access_set: tuple
    fired: tuple


@dataclass
class SimResult:
    cycles_elapsed: int
    per_core: dict
    per_bank_access: list
    finished: bool
    measured_core: Optional[int] = None
    trace: Optional[list] = None
    initial_state: object = None
    regulator_config: Optional[RegulatorConfig] = None
    final_state: object = None

    def cycles_for(self, core: int) -> int:
        r = self.per_core[core]
        if not r.finished:
            raise ValueError(f"core {core} did not finish its work quantum within {self.cycles_elapsed} cycles")
        return r.finish_cycle


def slowdown(co_run: SimResult, solo: SimResult, core: int) -> float:
    return co_run.cycles_for(core) / solo.cycles_for(core)


def program_regulator(reg: Regulator, scenario: Scenario):
    """Configure the unit through its MMIO registers, as system software would."""
    reg.register_write(RPR_OFFSET, scenario.regulation_period)
    for d, budget in enumerate(scenario.access_budget):
        reg.register_write(abr_offset(d), budget)
    for c in scenario.cores:
        reg.register_write(dar_offset(c.core_id), c.domain)
        reg.register_write(rer_offset(c.core_id), int(c.regulated))
    reg.reset_monitors()


class Simulation:
    def __init__(self, scenario: Scenario, trace: bool = False):
        scenario.validate()
        self.scenario = scenario
        self.reg = Regulator(scenario.regulator_config())
        program_regulator(self.reg, scenario)
        self.banks = [Bank(scenario.llc) for _ in range(scenario.llc.num_banks)]
        self.cores = {}
        for spec in scenario.cores:
            if not spec.enabled:
                continue
            self.cores[spec.core_id] = CoreModel(
                spec.core_id,
                spec.workload,
                scenario.core_region(spec),
                scenario.bank_map,
                max_outstanding=spec.max_outstanding,
                seed=scenario.seed * 1_000_003 + spec.core_id,
            )
        self.results = {
            c.core_id: CoreResult(c.core_id, c.domain) for c in scenario.cores
        }
        self.now = 0
        self._due = {}
        self._priority = [0] * scenario.llc.num_banks
        self.trace = [] if trace else None
        self.initial_state = self.reg.state.copy() if trace else None

    def step(self):
        t = self.now
        reg = self.reg
        banks = self.banks
        n_banks = len(banks)
        n_cores = reg.cfg.num_cores
        line = self.scenario.bank_map.line_size

        reg.tick()

        by_bank = [None] * n_banks
        proposing = []
        for c, core in self.cores.items():
            pend = core.next_issues(t)
            if not pend:
                continue
            proposing.append(c)
            for req in pend:
                slot = by_bank[req.bank]
                if slot is None:
                    by_bank[req.bank] = {c: req}
                elif c not in slot:
                    slot[c] = req

        reg_blocked = set()
        held = []
        picked = []
        for b in range(n_banks):
            slot = by_bank[b]
            if slot is None or banks[b].full:
                continue
            rot = self._priority[b]
            for k in range(n_cores):
                c = (rot + k) % n_cores
                req = slot.get(c)
                if req is None:
                    continue
                if reg.may_issue(c, b):
                    picked.append((c, b, req))
                    break
                reg_blocked.add(c)
                held.append((c, b))

        picked.sort(key=lambda p: (p[0], p[1]))
        fired = []
        admitted = set()
        for c, b, req in picked:
            if not reg.may_issue(c, b):
                reg_blocked.add(c)
                continue
            banks[b].try_accept(req, t)
            self._priority[b] = (c + 1) % n_cores
            reg.record_access(c, b)
            self.cores[c].on_issue(req)
            admitted.add(c)
            r = self.results[c]
            r.accepted += 1
            fired.append((c, b))

        for bank in banks:
            for comp in bank.service(t):
                self._due.setdefault(comp.finish_cycle, []).append(comp)
        for comp in self._due.pop(t, _EMPTY):
            core = self.cores[comp.core]
            core.on_completion(comp)
            r = self.results[comp.core]
            r.completed = core.completed
            if core.spec.is_write:
                r.bytes_written += line
            else:
                r.bytes_read += line
            if core.finished and not r.finished:
                r.finished = True
                r.finish_cycle = t + 1

        for c in proposing:
            if c in admitted:
                continue
            if c in reg_blocked:
                self.results[c].stall_cycles_regulatory += 1
            else:
                self.results[c].stall_cycles_structural += 1

        if self.trace is not None:
            access = tuple(sorted(held + [(c, b) for c, b, _ in picked]))
            self.trace.append(CycleTrace(reg.period_index, access or _EMPTY, tuple(fired) or _EMPTY))
        self.now = t + 1

    def done(self) -> bool:
        m = self.scenario.measured_core
        if m is not None:
            core = self.cores.get(m)
            return core is None or core.finished
        bounded = [c for c in self.cores.values() if c.bounded]
        return bool(bounded) and all(c.finished for c in bounded)

    def run(self) -> SimResult:
        limit = self.scenario.max_cycles
        while self.now < limit and not self.done():
            self.step()
        return self.result()

    def result(self) -> SimResult:
        m = self.scenario.measured_core
        if m is not None:
            finished = self.results[m].finished
        else:
            finished = self.done()
        return SimResult(
            cycles_elapsed=self.now,
            per_core=self.results,
            per_bank_access=[list(row) for row in self.reg.state.monitor],
            finished=finished,
            measured_core=m,
            trace=self.trace,
            initial_state=self.initial_state,
            regulator_config=self.reg.cfg,
            final_state=self.reg.state.copy(),
        )


def run(scenario: Scenario, trace: bool = False) -> SimResult:
    return Simulation(scenario, trace=trace).run()
