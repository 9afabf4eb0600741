"""Bandwidth regulation unit: register file, period counter, budget checks and monitors.

The unit sits between the cores and the shared cache.  Each cycle the owner
calls :meth:`Regulator.tick` once, then :meth:`Regulator.may_issue` for each
request presented on a core's request channel, and :meth:`Regulator.record_access`
for each request whose handshake completed.

Register map (byte offsets, 8-byte registers)::

    0x000               RPR            regulation period in cycles
    0x008 + d*8         ABR[d]         access budget per period of domain d
    0x100 + c*8         DAR[c]         domain of core c
    0x180 + c*8         RER[c]         regulation enable of core c
    0x200 + (d*B+b)*8   BAC[d][b]      bank access counter (read-only)
    0x400 + (c*B+b)*8   MON[c][b]      per-core bank monitor (write 0 to reset)
"""

import enum
from dataclasses import dataclass, field
from fractions import Fraction

RPR_OFFSET = 0x000
ABR_BASE = 0x008
DAR_BASE = 0x100
RER_BASE = 0x180
BAC_BASE = 0x200
MON_BASE = 0x400
REG_WIDTH = 8

MAX_DOMAINS = (DAR_BASE - ABR_BASE) // REG_WIDTH
MAX_CORES = (RER_BASE - DAR_BASE) // REG_WIDTH


class Policy(enum.Enum):
    UNREGULATED = "unregulated"
    ALL_BANK = "allbank"
    PER_BANK = "perbank"

    @classmethod
    def parse(cls, text: str) -> "Policy":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for p in cls:
            if p.value == key:
                return p
        raise ValueError(f"unknown policy {text!r} (expected unregulated, allbank or perbank)")


class RegulatorFault(Exception):
    """A core or bank index that does not exist in the configured unit."""


class RegisterError(Exception):
    """Bad MMIO access: unknown offset or illegal write."""


@dataclass(frozen=True)
class RegulatorConfig:
    policy: Policy = Policy.UNREGULATED
    regulation_period: int = 400
    num_domains: int = 2
    num_cores: int = 3
    num_banks: int = 2
    access_budget: tuple = (0, 0)
    transaction_size: int = 16
    clock_hz: int = 1_000_000_000

    def __post_init__(self):
        if self.regulation_period < 1:
            raise ValueError("regulation_period must be >= 1")
        if not 1 <= self.num_domains <= MAX_DOMAINS:
            raise ValueError(f"num_domains must be in [1, {MAX_DOMAINS}]")
        if not 1 <= self.num_cores <= MAX_CORES:
            raise ValueError(f"num_cores must be in [1, {MAX_CORES}]")
        if self.num_banks < 1:
            raise ValueError("num_banks must be >= 1")
        if len(self.access_budget) != self.num_domains:
            raise ValueError(
                f"access_budget has {len(self.access_budget)} entries for {self.num_domains} domains"
            )
        if any(b < 0 for b in self.access_budget):
            raise ValueError("access_budget entries must be >= 0")


@dataclass
class RegulatorState:
    """Plain register/counter contents.  Shared by the production unit and the oracle."""

    rpr: int
    abr: list
    domain_of: list
    enabled: list
    period_counter: int = 0
    bank_counters: list = field(default_factory=list)
    allbank_counters: list = field(default_factory=list)
    monitor: list = field(default_factory=list)

    @classmethod
    def initial(cls, cfg: RegulatorConfig) -> "RegulatorState":
        return cls(
            rpr=cfg.regulation_period,
            abr=list(cfg.access_budget),
            domain_of=[0] * cfg.num_cores,
            enabled=[False] * cfg.num_cores,
            bank_counters=[[0] * cfg.num_banks for _ in range(cfg.num_domains)],
            allbank_counters=[0] * cfg.num_domains,
            monitor=[[0] * cfg.num_banks for _ in range(cfg.num_cores)],
        )

    def copy(self) -> "RegulatorState":
        return RegulatorState(
            rpr=self.rpr,
            abr=list(self.abr),
            domain_of=list(self.domain_of),
            enabled=list(self.enabled),
            period_counter=self.period_counter,
            bank_counters=[list(row) for row in self.bank_counters],
            allbank_counters=list(self.allbank_counters),
            monitor=[list(row) for row in self.monitor],
        )


def bandwidth_of(abr: int, rpr: int, ts: int, f: int) -> int:
    """Bytes/second granted by a budget of ``abr`` accesses of ``ts`` bytes per ``rpr`` cycles at ``f`` Hz."""
    if rpr <= 0:
        raise ValueError("regulation period must be >= 1 cycle")
    return round(Fraction(abr, rpr) * ts * Fraction(f))


class Regulator:
    def __init__(self, cfg: RegulatorConfig, state: RegulatorState = None):
        self.cfg = cfg
        self.state = state if state is not None else RegulatorState.initial(cfg)
        # number of completed period resets; used to bucket accesses for audits
        self.period_index = 0

    # -- per-cycle operation -------------------------------------------------

    def tick(self):
        st = self.state
        if st.period_counter >= st.rpr:
            st.period_counter = 0
            for row in st.bank_counters:
                row[:] = [0] * len(row)
            st.allbank_counters[:] = [0] * len(st.allbank_counters)
            self.period_index += 1
        else:
            st.period_counter += 1

    def _check(self, core, bank):
        if not 0 <= core < self.cfg.num_cores:
            raise RegulatorFault(f"core {core} out of range (num_cores={self.cfg.num_cores})")
        if not 0 <= bank < self.cfg.num_banks:
            raise RegulatorFault(f"bank {bank} out of range (num_banks={self.cfg.num_banks})")

    def may_issue(self, core: int, bank: int) -> bool:
        """False means the request channel of ``core`` is held (ready/valid low) this cycle."""
        self._check(core, bank)
        st = self.state
        policy = self.cfg.policy
        if policy is Policy.UNREGULATED or not st.enabled[core]:
            return True
        d = st.domain_of[core]
        if policy is Policy.PER_BANK:
            return st.bank_counters[d][bank] < st.abr[d]
        return st.allbank_counters[d] < st.abr[d]

    def record_access(self, core: int, bank: int):
        self._check(core, bank)
        st = self.state
        d = st.domain_of[core]
        if self.cfg.policy is Policy.PER_BANK:
            st.bank_counters[d][bank] += 1
        elif self.cfg.policy is Policy.ALL_BANK:
            st.allbank_counters[d] += 1
        st.monitor[core][bank] += 1

    def reset_monitors(self):
        for row in self.state.monitor:
            row[:] = [0] * len(row)

    # -- MMIO ----------------------------------------------------------------

    def _decode(self, offset):
        cfg = self.cfg
        if offset % REG_WIDTH:
            raise RegisterError(f"unaligned register offset {offset:#x}")
        if offset == RPR_OFFSET:
            return "RPR", ()
        if ABR_BASE <= offset < ABR_BASE + cfg.num_domains * REG_WIDTH:
            return "ABR", ((offset - ABR_BASE) // REG_WIDTH,)
        if DAR_BASE <= offset < DAR_BASE + cfg.num_cores * REG_WIDTH:
            return "DAR", ((offset - DAR_BASE) // REG_WIDTH,)
        if RER_BASE <= offset < RER_BASE + cfg.num_cores * REG_WIDTH:
            return "RER", ((offset - RER_BASE) // REG_WIDTH,)
        n = (offset - BAC_BASE) // REG_WIDTH
        if BAC_BASE <= offset and n < cfg.num_domains * cfg.num_banks and offset < MON_BASE:
            return "BAC", divmod(n, cfg.num_banks)
        n = (offset - MON_BASE) // REG_WIDTH
        if MON_BASE <= offset and n < cfg.num_cores * cfg.num_banks:
            return "MON", divmod(n, cfg.num_banks)
        raise RegisterError(f"unknown register offset {offset:#x}")

    def register_read(self, offset: int) -> int:
        name, idx = self._decode(offset)
        st = self.state
        if name == "RPR":
            return st.rpr
        if name == "ABR":
            return st.abr[idx[0]]
        if name == "DAR":
            return st.domain_of[idx[0]]
        if name == "RER":
            return int(st.enabled[idx[0]])
        if name == "BAC":
            d, b = idx
            if self.cfg.policy is Policy.ALL_BANK:
                # bank-oblivious unit keeps one counter per domain, mirrored in every bank slot
                return st.allbank_counters[d]
            return st.bank_counters[d][b]
        c, b = idx
        return st.monitor[c][b]

    def register_write(self, offset: int, value: int):
        name, idx = self._decode(offset)
        st = self.state
        if value < 0:
            raise RegisterError(f"negative value written to {name} at {offset:#x}")
        if name == "RPR":
            if value < 1:
                raise RegisterError("RPR must be >= 1")
            st.rpr = value
        elif name == "ABR":
            st.abr[idx[0]] = value
        elif name == "DAR":
            if value >= self.cfg.num_domains:
                raise RegisterError(f"domain {value} out of range (num_domains={self.cfg.num_domains})")
            st.domain_of[idx[0]] = value
        elif name == "RER":
            if value not in (0, 1):
                raise RegisterError(f"RER accepts 0 or 1, got {value}")
            st.enabled[idx[0]] = bool(value)
        elif name == "BAC":
            raise RegisterError(f"BAC at {offset:#x} is read-only")
        else:
            if value != 0:
                raise RegisterError(f"monitor counter at {offset:#x} only accepts 0 (reset)")
            c, b = idx
            st.monitor[c][b] = 0

    def register_map(self):
        """List of ``(offset, name)`` for every register of this configuration."""
        cfg = self.cfg
        out = [(RPR_OFFSET, "RPR")]
        out += [(ABR_BASE + d * REG_WIDTH, f"ABR[{d}]") for d in range(cfg.num_domains)]
        out += [(DAR_BASE + c * REG_WIDTH, f"DAR[{c}]") for c in range(cfg.num_cores)]
        out += [(RER_BASE + c * REG_WIDTH, f"RER[{c}]") for c in range(cfg.num_cores)]
        out += [
            (BAC_BASE + (d * cfg.num_banks + b) * REG_WIDTH, f"BAC[{d}][{b}]")
            for d in range(cfg.num_domains)
            for b in range(cfg.num_banks)
        ]
        out += [
            (MON_BASE + (c * cfg.num_banks + b) * REG_WIDTH, f"MON[{c}][{b}]")
            for c in range(cfg.num_cores)
            for b in range(cfg.num_banks)
        ]
        return out


def abr_offset(domain: int) -> int:
    return ABR_BASE + domain * REG_WIDTH


def dar_offset(core: int) -> int:
    return DAR_BASE + core * REG_WIDTH


def rer_offset(core: int) -> int:
    return RER_BASE + core * REG_WIDTH


def bac_offset(domain: int, bank: int, num_banks: int) -> int:
    return BAC_BASE + (domain * num_banks + bank) * REG_WIDTH


def monitor_offset(core: int, bank: int, num_banks: int) -> int:
    return MON_BASE + (core * num_banks + bank) * REG_WIDTH
