"""Physical address helpers: bank selection and partition regions."""

from dataclasses import dataclass

VALID_BANK_COUNTS = (1, 2, 4, 8)


@dataclass(frozen=True)
class BankMapConfig:
    """Flat bank mapping: ``log2(num_banks)`` address bits starting at ``start_bit``."""

    start_bit: int = 6
    num_banks: int = 2
    line_size: int = 64

    def __post_init__(self):
        if self.num_banks not in VALID_BANK_COUNTS:
            raise ValueError(f"num_banks must be one of {VALID_BANK_COUNTS}, got {self.num_banks}")
        if self.start_bit < 0:
            raise ValueError(f"start_bit must be >= 0, got {self.start_bit}")
        if self.line_size <= 0 or self.line_size & (self.line_size - 1):
            raise ValueError(f"line_size must be a power of two, got {self.line_size}")

    @property
    def bank_bits(self) -> int:
        return self.num_banks.bit_length() - 1

    @property
    def period(self) -> int:
        """Address distance after which the bank pattern repeats."""
        return self.num_banks << self.start_bit


def bank_of(addr: int, cfg: BankMapConfig) -> int:
    return (addr >> cfg.start_bit) & (cfg.num_banks - 1)


@dataclass(frozen=True)
class Region:
    """Half-open byte range ``[base, limit)``."""

    base: int
    limit: int

    def __post_init__(self):
        if self.base < 0 or self.limit < self.base:
            raise ValueError(f"invalid region [{self.base:#x}, {self.limit:#x})")

    @property
    def size(self) -> int:
        return self.limit - self.base

    def overlaps(self, other: "Region") -> bool:
        return self.base < other.limit and other.base < self.limit


def in_partition(addr: int, region: Region) -> bool:
    return region.base <= addr < region.limit


@dataclass(frozen=True)
class PartitionConfig:
    """Disjoint set-partitioned halves of the LLC: one for the victim, one for best-effort cores."""

    victim: Region = Region(0, 512 * 1024)
    best_effort: Region = Region(512 * 1024, 1024 * 1024)

    def __post_init__(self):
        if self.victim.overlaps(self.best_effort):
            raise ValueError(
                f"victim region [{self.victim.base:#x}, {self.victim.limit:#x}) overlaps "
                f"best_effort region [{self.best_effort.base:#x}, {self.best_effort.limit:#x})"
            )

    def region(self, name: str) -> Region:
        if name == "victim":
            return self.victim
        if name == "best_effort":
            return self.best_effort
        raise KeyError(f"unknown partition region {name!r}")


def lines_in_region(region: Region, cfg: BankMapConfig, target_bank=None):
    """Yield line-aligned addresses in ``region``, optionally only those on ``target_bank``."""
    first = -(-region.base // cfg.line_size) * cfg.line_size
    for addr in range(first, region.limit - cfg.line_size + 1, cfg.line_size):
        if target_bank is None or bank_of(addr, cfg) == target_bank:
            yield addr
