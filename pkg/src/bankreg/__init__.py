"""Cycle-stepped model of a multi-bank shared LLC with per-bank bandwidth regulation."""

from bankreg.address_map import BankMapConfig, PartitionConfig, Region, bank_of, in_partition
from bankreg.regulator import Policy, Regulator, RegulatorConfig, bandwidth_of

__all__ = [
    "BankMapConfig",
    "PartitionConfig",
    "Region",
    "bank_of",
    "in_partition",
    "Policy",
    "Regulator",
    "RegulatorConfig",
    "bandwidth_of",
]

__version__ = "0.1.0"
