"""Shared LLC service model: independent banks with FIFO queues and fixed occupancy.

Every access hits (set partitioning removes conflict misses), so a bank is a
single server with deterministic service time.  The interconnect in front of
the banks has no contention of its own.
"""

from collections import deque
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class LlcConfig:
    num_banks: int = 2
    # calibrated so an 8-deep pointer-chasing core is latency-bound, not bank-bound, when alone
    bank_service_cycles: int = 2
    hit_latency: int = 16
    queue_depth: int = 8
    write_service_cycles: Optional[int] = None

    def __post_init__(self):
        if self.bank_service_cycles < 1:
            raise ValueError("bank_service_cycles must be >= 1")
        if self.write_service_cycles is not None and self.write_service_cycles < 1:
            raise ValueError("write_service_cycles must be >= 1")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if self.hit_latency < 0:
            raise ValueError("hit_latency must be >= 0")

    def service_cycles(self, is_write: bool) -> int:
        if is_write and self.write_service_cycles is not None:
            return self.write_service_cycles
        return self.bank_service_cycles


@dataclass(slots=True)
class Request:
    core: int
    tag: int
    addr: int
    bank: int
    is_write: bool
    issue_cycle: int = -1
    stream: int = 0


@dataclass(frozen=True)
class Completion:
    core: int
    request_tag: int
    finish_cycle: int
    issue_cycle: int


class Bank:
    """One cache bank: a FIFO of accepted requests and the cycle it next becomes free."""

    def __init__(self, cfg: LlcConfig):
        self.cfg = cfg
        self.pending = deque()
        self.busy_until = 0
        self.serviced = 0

    @property
    def full(self) -> bool:
        return len(self.pending) >= self.cfg.queue_depth

    def try_accept(self, request: Request, now: int) -> bool:
        if len(self.pending) >= self.cfg.queue_depth:
            return False
        request.issue_cycle = now
        self.pending.append(request)
        return True

    def service(self, now: int) -> list:
        if now < self.busy_until or not self.pending:
            return []
        req = self.pending.popleft()
        occupancy = self.cfg.service_cycles(req.is_write)
        self.busy_until = now + occupancy
        self.serviced += 1
        return [Completion(req.core, req.tag, now + occupancy + self.cfg.hit_latency, req.issue_cycle)]
