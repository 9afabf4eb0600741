import random

import pytest

from bankreg.address_map import BankMapConfig
from bankreg.engine import CoreSpec, Scenario
from bankreg.memory import LlcConfig
from bankreg.regulator import Policy, RegulatorConfig
from bankreg.workloads import WorkloadSpec


def production_step(reg, access_set):
    """Drive the production unit through one cycle the way the engine presents requests."""
    reg.tick()
    stall = set()
    for core, bank in sorted(access_set):
        if reg.may_issue(core, bank):
            reg.record_access(core, bank)
        else:
            stall.add((core, bank))
    return stall


def random_config(rng: random.Random, policy=None):
    n_domains = rng.randint(1, 2)
    return RegulatorConfig(
        policy=policy or rng.choice(list(Policy)),
        regulation_period=rng.randint(1, 16),
        num_domains=n_domains,
        num_cores=rng.randint(1, 4),
        num_banks=rng.choice([1, 2, 4]),
        access_budget=tuple(rng.randint(0, 8) for _ in range(n_domains)),
    )


def random_access_set(rng, cfg, density=0.4):
    return {
        (c, b)
        for c in range(cfg.num_cores)
        for b in range(cfg.num_banks)
        if rng.random() < density
    }


def attack_scenario(banks=2, attacker_bank=0, attackers=True, policy=Policy.UNREGULATED,
                    abr=32, rpr=400, iterations=1024, **llc):
    victim = CoreSpec(0, WorkloadSpec("bkpll", 128 * 1024, 0, False, 8, 64, iterations),
                      domain=0, region="victim")
    cores = [victim]
    span = 64 * 1024 * banks
    if attackers:
        for i in (1, 2):
            cores.append(CoreSpec(i, WorkloadSpec("mempress", 64 * 1024, attacker_bank, False, 4),
                                  domain=1, regulated=True, region="best_effort",
                                  offset=(i - 1) * span))
    return Scenario(
        llc=LlcConfig(num_banks=banks, **llc),
        bank_map=BankMapConfig(6, banks),
        policy=policy,
        regulation_period=rpr,
        access_budget=(0, abr),
        cores=tuple(cores),
        measured_core=0,
    )


def bandwidth_scenario(banks=2, policy=Policy.UNREGULATED, abr=32, rpr=400, iterations=4096):
    core = CoreSpec(0, WorkloadSpec("bandwidth", 128 * 1024, None, False, 1, 64, iterations),
                    domain=0, regulated=True, region="best_effort")
    return Scenario(
        llc=LlcConfig(num_banks=banks),
        bank_map=BankMapConfig(6, banks),
        policy=policy,
        regulation_period=rpr,
        access_budget=(abr,),
        cores=(core,),
        measured_core=0,
    )


@pytest.fixture
def rng():
    return random.Random(12345)


# acceptance criteria report one line each; collected here and echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
