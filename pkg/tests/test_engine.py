from dataclasses import replace

import pytest

from bankreg.audit import AuditError, budget_audit, replay
from bankreg.engine import CoreSpec, Scenario, Simulation, run, slowdown
from bankreg.memory import LlcConfig
from bankreg.regulator import Policy
from bankreg.workloads import WorkloadSpec

from conftest import attack_scenario, bandwidth_scenario


@pytest.fixture(scope="module")
def solo():
    return run(attack_scenario(attackers=False))


def test_solo_finishes(solo):
    assert solo.finished
    r = solo.per_core[0]
    assert r.completed == 1024 and r.accepted == 1024
    assert r.stall_cycles_regulatory == 0
    assert r.bytes_read == 1024 * 64 and r.bytes_written == 0


def test_solo_independent_of_policy(solo):
    for policy in Policy:
        res = run(attack_scenario(attackers=False, policy=policy, abr=1))
        assert res.cycles_for(0) == solo.cycles_for(0)


def test_solo_is_latency_bound(solo):
    # 8 chains, each hop costs service + hit latency
    cfg = LlcConfig()
    hop = cfg.bank_service_cycles + cfg.hit_latency
    hops = 1024 // 8
    assert hops * hop <= solo.cycles_for(0) <= 1.1 * hops * hop
    # the bank alone could serve everything much faster
    assert 1024 * cfg.bank_service_cycles < solo.cycles_for(0)


def test_diff_bank_no_interference(solo):
    co = run(attack_scenario(attacker_bank=1))
    assert slowdown(co, solo, 0) <= 1.05


def test_same_bank_interference(solo):
    co = run(attack_scenario(attacker_bank=0))
    assert slowdown(co, solo, 0) >= 2.0
    assert co.per_core[1].stall_cycles_structural > 0


def test_throttling_is_monotone(solo):
    prev = 0
    for abr in (8, 32, 128):
        s = slowdown(run(attack_scenario(policy=Policy.PER_BANK, abr=abr)), solo, 0)
        assert s >= prev
        prev = s


def test_regulatory_stalls_counted():
    res = run(attack_scenario(policy=Policy.PER_BANK, abr=4))
    assert res.per_core[1].stall_cycles_regulatory > 0
    assert res.per_core[0].stall_cycles_regulatory == 0


def test_max_cycles_flags_unfinished():
    res = run(replace(attack_scenario(), max_cycles=100))
    assert not res.finished and res.cycles_elapsed == 100
    with pytest.raises(ValueError, match="did not finish"):
        res.cycles_for(0)


def test_zero_budget_never_admits():
    s = bandwidth_scenario(policy=Policy.ALL_BANK, abr=0)
    res = run(replace(s, max_cycles=2000))
    assert not res.finished
    assert res.per_core[0].accepted == 0
    assert res.per_core[0].stall_cycles_regulatory == 2000


def test_deterministic():
    a = run(attack_scenario(policy=Policy.ALL_BANK, abr=16))
    b = run(attack_scenario(policy=Policy.ALL_BANK, abr=16))
    assert a.per_core == b.per_core and a.per_bank_access == b.per_bank_access


def test_monitors_match_accepted():
    res = run(attack_scenario(policy=Policy.PER_BANK, abr=16))
    for c, r in res.per_core.items():
        assert sum(res.per_bank_access[c]) == r.accepted


@pytest.mark.parametrize("policy", list(Policy))
def test_trace_replays_against_oracle(policy):
    s = attack_scenario(policy=policy, abr=16, iterations=256)
    res = run(s, trace=True)
    assert replay(res) == res.cycles_elapsed
    peak = budget_audit(res, s)
    if policy is not Policy.UNREGULATED:
        assert max(peak.values()) <= 16


def test_replay_detects_tampering():
    res = run(attack_scenario(policy=Policy.PER_BANK, abr=16, iterations=128), trace=True)
    for i, rec in enumerate(res.trace):
        if rec.fired:
            res.trace[i] = replace(rec, fired=rec.fired[1:])
            break
    with pytest.raises(AuditError):
        replay(res)


def test_budget_audit_flags_overrun():
    s = attack_scenario(policy=Policy.PER_BANK, abr=16, iterations=128)
    res = run(s, trace=True)
    with pytest.raises(AuditError):
        budget_audit(res, replace(s, access_budget=(0, 2)))


def test_policies_identical_when_one_bank_is_hit():
    fired = []
    for policy in (Policy.ALL_BANK, Policy.PER_BANK):
        res = run(attack_scenario(policy=policy, abr=32, iterations=512), trace=True)
        fired.append([r.fired for r in res.trace])
    assert fired[0] == fired[1]


def test_perbank_beats_allbank_on_spread_traffic():
    a = run(bandwidth_scenario(policy=Policy.ALL_BANK, iterations=1024)).cycles_for(0)
    p = run(bandwidth_scenario(policy=Policy.PER_BANK, iterations=1024)).cycles_for(0)
    assert 1.8 <= a / p <= 2.2


def test_one_acceptance_per_bank_per_cycle():
    res = run(attack_scenario(iterations=256), trace=True)
    for rec in res.trace:
        banks = [b for _, b in rec.fired]
        assert len(banks) == len(set(banks))


def test_disabled_core_is_absent():
    s = attack_scenario()
    cores = tuple(replace(c, enabled=c.core_id == 0) for c in s.cores)
    res = run(replace(s, cores=cores))
    assert res.per_core[1].accepted == 0
    assert res.cycles_for(0) == run(attack_scenario(attackers=False)).cycles_for(0)


@pytest.mark.parametrize("bad", [
    dict(llc=LlcConfig(num_banks=4)),
    dict(access_budget=(0,)),
    dict(measured_core=7),
    dict(max_cycles=0),
])
def test_validation(bad):
    with pytest.raises(ValueError):
        Simulation(replace(attack_scenario(), **bad))


def test_duplicate_core_ids():
    c = CoreSpec(0, WorkloadSpec("bandwidth", 4096))
    with pytest.raises(ValueError, match="duplicate"):
        Scenario(cores=(c, c)).validate()


def test_config_hash_stable():
    a, b = attack_scenario(), attack_scenario()
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != attack_scenario(abr=33).config_hash()
    assert len(a.config_hash()) == 12


def test_program_regulator_sets_registers():
    sim = Simulation(attack_scenario(policy=Policy.PER_BANK, abr=24))
    st = sim.reg.state
    assert st.rpr == 400 and st.abr == [0, 24]
    assert st.domain_of == [0, 1, 1]
    assert st.enabled == [False, True, True]
