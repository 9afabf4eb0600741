"""Post-run checks over an engine trace: oracle replay and budget bounds."""

from collections import Counter

from bankreg.reference import reference_step
from bankreg.regulator import Policy


class AuditError(AssertionError):
    pass


def replay(result):
    """Re-run every traced cycle through the naive oracle and compare admissions.

    Returns the number of cycles replayed.  Raises :class:`AuditError` on the
    first cycle where the oracle stalls a different set of requests than the
    engine did, or if final counters differ.
    """
    if result.trace is None:
        raise ValueError("result carries no trace; run with trace=True")
    cfg = result.regulator_config
    state = result.initial_state.copy()
    for cycle, rec in enumerate(result.trace):
        access = set(rec.access_set)
        stall, state = reference_step(state, cfg, access)
        expected = access - stall
        if expected != set(rec.fired):
            raise AuditError(
                f"cycle {cycle}: engine admitted {sorted(rec.fired)}, oracle admits {sorted(expected)}"
            )
    final = result.final_state
    for name in ("period_counter", "bank_counters", "allbank_counters", "monitor"):
        if getattr(state, name) != getattr(final, name):
            raise AuditError(f"final {name} differs: oracle {getattr(state, name)}, engine {getattr(final, name)}")
    return len(result.trace)


def budget_audit(result, scenario):
    """Largest per-period charge for each fully regulated domain, checked against its budget.

    Returns ``{(domain, bank_or_None): max_accesses_in_any_period}``.  Under
    the bank-oblivious policy the bank slot is ``None``.
    """
    if result.trace is None:
        raise ValueError("result carries no trace; run with trace=True")
    domain_of = {c.core_id: c.domain for c in scenario.cores}
    regulated = {}
    for c in scenario.cores:
        regulated[c.domain] = regulated.get(c.domain, True) and c.regulated
    policy = scenario.policy
    counts = Counter()
    for rec in result.trace:
        for core, bank in rec.fired:
            d = domain_of[core]
            if not regulated.get(d):
                continue
            key = (d, bank if policy is Policy.PER_BANK else None)
            counts[(rec.period_index,) + key] += 1
    peak = {}
    for (period, d, bank), n in counts.items():
        peak[(d, bank)] = max(peak.get((d, bank), 0), n)
    if policy is not Policy.UNREGULATED:
        for (d, bank), n in peak.items():
            if n > scenario.access_budget[d]:
                raise AuditError(f"domain {d} bank {bank}: {n} accesses in one period, budget {scenario.access_budget[d]}")
    return peak
