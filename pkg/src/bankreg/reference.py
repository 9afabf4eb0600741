"""Naive line-by-line regulation step, kept only as a test oracle.

Deliberately slow and literal: nested loops over every core and every bank,
fresh copies of all state, no shared helpers with :mod:`bankreg.regulator`
beyond the plain state container.
"""

from bankreg.regulator import Policy


def reference_step(state, config, access_set):
    """Advance one cycle.

    ``access_set`` holds ``(core, bank)`` pairs whose request is valid on the
    channel this cycle with the downstream ready.  Returns ``(stall_set, new_state)``
    where ``stall_set`` are the pairs held back by regulation; every other pair
    in ``access_set`` transfers and is counted.
    """
    s = state.copy()
    n_cores = config.num_cores
    n_banks = config.num_banks

    if s.period_counter >= s.rpr:
        s.period_counter = 0
        for d in range(len(s.bank_counters)):
            for b in range(len(s.bank_counters[d])):
                s.bank_counters[d][b] = 0
        for d in range(len(s.allbank_counters)):
            s.allbank_counters[d] = 0
    else:
        s.period_counter = s.period_counter + 1

    stall = set()
    for i in range(n_cores):
        for j in range(n_banks):
            access_is_bank = (i, j) in access_set
            dom = s.domain_of[i]

            stalled = False
            if config.policy == Policy.PER_BANK:
                if s.enabled[i] and s.bank_counters[dom][j] >= s.abr[dom] and access_is_bank:
                    stalled = True
            elif config.policy == Policy.ALL_BANK:
                if s.enabled[i] and s.allbank_counters[dom] >= s.abr[dom] and access_is_bank:
                    stalled = True
            if stalled:
                stall.add((i, j))

            is_access = access_is_bank and not stalled
            if is_access:
                if config.policy == Policy.PER_BANK:
                    s.bank_counters[dom][j] = s.bank_counters[dom][j] + 1
                elif config.policy == Policy.ALL_BANK:
                    s.allbank_counters[dom] = s.allbank_counters[dom] + 1
                s.monitor[i][j] = s.monitor[i][j] + 1

    return stall, s
