"""Core issue models and synthetic workload generators.

Cores are pure memory-request engines with a bounded window of outstanding
requests.  Three generators are provided:

* ``bkpll``     - ``mlp`` independent pointer chains, each a random cyclic walk
                  over lines of one target bank; a chain issues its next load
                  only after the previous one returns.
* ``bandwidth`` - sequential sweep over the working set at a fixed stride.
* ``mempress``  - ``mlp`` independent streams over lines of a target bank,
                  issued round-robin without dependencies.
"""

import random
from dataclasses import dataclass
from typing import Optional

from bankreg.address_map import BankMapConfig, Region, bank_of, lines_in_region
from bankreg.memory import Completion, Request

KINDS = ("bkpll", "bandwidth", "mempress")

DEFAULT_MAX_OUTSTANDING = {"bkpll": 8, "bandwidth": 8, "mempress": 16}


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "bkpll"
    wss: int = 128 * 1024
    target_bank: Optional[int] = None
    is_write: bool = False
    mlp: int = 8
    stride: int = 64
    # 0 means unbounded (attackers run until the measured core finishes)
    total_iterations: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown workload kind {self.kind!r}; expected one of {KINDS}")
        if self.wss <= 0:
            raise ValueError("wss must be > 0")
        if self.mlp < 1:
            raise ValueError("mlp must be >= 1")
        if self.stride <= 0:
            raise ValueError("stride must be > 0")
        if self.total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")


def _bank_lines(spec: WorkloadSpec, region: Region, bank_cfg: BankMapConfig):
    if spec.wss % bank_cfg.line_size:
        raise LayoutError(f"wss {spec.wss} is not a multiple of the {bank_cfg.line_size} B line")
    need = spec.wss // bank_cfg.line_size
    lines = []
    for addr in lines_in_region(region, bank_cfg, spec.target_bank):
        lines.append(addr)
        if len(lines) == need:
            return lines
    where = "" if spec.target_bank is None else f" on bank {spec.target_bank}"
    raise LayoutError(
        f"region [{region.base:#x}, {region.limit:#x}) holds only {len(lines)} lines{where}, "
        f"{need} needed for wss {spec.wss}"
    )


def _split(lines, parts):
    n, extra = divmod(len(lines), parts)
    out, i = [], 0
    for k in range(parts):
        size = n + (1 if k < extra else 0)
        out.append(lines[i:i + size])
        i += size
    return out


def build_bkpll_layout(spec: WorkloadSpec, region: Region, bank_cfg: BankMapConfig, seed: int):
    """Return ``spec.mlp`` address-disjoint cyclic chains covering the working set.

    The line order is a seeded random permutation so consecutive hops land
    on unrelated lines.
    """
    lines = _bank_lines(spec, region, bank_cfg)
    if len(lines) < spec.mlp:
        raise LayoutError(f"{len(lines)} lines cannot form {spec.mlp} non-empty chains")
    random.Random(seed).shuffle(lines)
    return _split(lines, spec.mlp)


def build_mempress_streams(spec: WorkloadSpec, region: Region, bank_cfg: BankMapConfig):
    lines = _bank_lines(spec, region, bank_cfg)
    streams = min(spec.mlp, len(lines))
    return _split(lines, streams)


def build_bandwidth_sweep(spec: WorkloadSpec, region: Region, bank_cfg: BankMapConfig):
    if spec.target_bank is not None:
        raise LayoutError("bandwidth workload sweeps every bank; target_bank must be unset")
    if spec.wss % bank_cfg.line_size:
        raise LayoutError(f"wss {spec.wss} is not a multiple of the {bank_cfg.line_size} B line")
    if region.base + spec.wss > region.limit:
        raise LayoutError(f"wss {spec.wss} does not fit region of {region.size} bytes")
    return list(range(region.base, region.base + spec.wss, spec.stride))


class CoreModel:
    """A core's request window: proposals waiting for a bank plus requests in flight."""

    def __init__(self, core_id: int, spec: WorkloadSpec, region: Region, bank_cfg: BankMapConfig,
                 max_outstanding: Optional[int] = None, seed: int = 0):
        self.core_id = core_id
        self.spec = spec
        self.region = region
        self.bank_cfg = bank_cfg
        self.max_outstanding = max_outstanding or DEFAULT_MAX_OUTSTANDING[spec.kind]
        if self.max_outstanding < 1:
            raise ValueError("max_outstanding must be >= 1")
        self.completed = 0
        self.generated = 0
        self.in_flight = {}
        self.pending = []
        self._next_tag = 0

        if spec.kind == "bkpll":
            self.chains = build_bkpll_layout(spec, region, bank_cfg, seed)
            self._pos = [0] * len(self.chains)
            self._chain_busy = [False] * len(self.chains)
        elif spec.kind == "mempress":
            self.chains = build_mempress_streams(spec, region, bank_cfg)
            self._pos = [0] * len(self.chains)
            self._rr = 0
        else:
            self.chains = [build_bandwidth_sweep(spec, region, bank_cfg)]
            self._pos = [0]

    @property
    def bounded(self) -> bool:
        return self.spec.total_iterations > 0

    @property
    def finished(self) -> bool:
        return self.bounded and self.completed >= self.spec.total_iterations

    def addresses(self):
        """Every address this core can ever touch."""
        return [a for chain in self.chains for a in chain]

    def _budget_left(self):
        room = self.max_outstanding - len(self.in_flight) - len(self.pending)
        if self.bounded:
            room = min(room, self.spec.total_iterations - self.generated)
        return room

    def _make(self, addr, stream):
        req = Request(self.core_id, self._next_tag, addr, bank_of(addr, self.bank_cfg),
                      self.spec.is_write, stream=stream)
        self._next_tag += 1
        self.generated += 1
        return req

    def next_issues(self, now: int) -> list:
        """Top up the proposal list and return it (oldest first, retries included)."""
        room = self._budget_left()
        if room <= 0:
            return self.pending
        kind = self.spec.kind
        if kind == "bkpll":
            for k, chain in enumerate(self.chains):
                if room == 0:
                    break
                if not self._chain_busy[k]:
                    self._chain_busy[k] = True
                    self.pending.append(self._make(chain[self._pos[k]], k))
                    room -= 1
        elif kind == "mempress":
            n = len(self.chains)
            for _ in range(room):
                k = self._rr
                self._rr = (k + 1) % n
                chain = self.chains[k]
                self.pending.append(self._make(chain[self._pos[k]], k))
                self._pos[k] = (self._pos[k] + 1) % len(chain)
        else:
            sweep = self.chains[0]
            for _ in range(room):
                self.pending.append(self._make(sweep[self._pos[0]], 0))
                self._pos[0] = (self._pos[0] + 1) % len(sweep)
        return self.pending

    def on_issue(self, req: Request):
        self.pending.remove(req)
        self.in_flight[req.tag] = req

    def on_completion(self, completion: Completion):
        if completion.core != self.core_id:
            raise RuntimeError(f"completion for core {completion.core} delivered to core {self.core_id}")
        try:
            req = self.in_flight.pop(completion.request_tag)
        except KeyError:
            raise RuntimeError(
                f"core {self.core_id}: completion for unknown tag {completion.request_tag}"
            ) from None
        self.completed += 1
        if self.spec.kind == "bkpll":
            k = req.stream
            self._pos[k] = (self._pos[k] + 1) % len(self.chains[k])
            self._chain_busy[k] = False
