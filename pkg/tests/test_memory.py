import pytest
from hypothesis import given, settings, strategies as st

from bankreg.memory import Bank, LlcConfig, Request


def req(tag, core=0, bank=0, write=False):
    return Request(core, tag, tag * 64, bank, write)


def test_empty_bank_accepts():
    b = Bank(LlcConfig(queue_depth=8))
    assert b.try_accept(req(0), 5)
    assert len(b.pending) == 1
    assert b.pending[0].issue_cycle == 5


def test_full_bank_refuses():
    b = Bank(LlcConfig(queue_depth=8))
    for i in range(8):
        assert b.try_accept(req(i), 0)
    assert b.full
    assert not b.try_accept(req(8), 0)
    assert len(b.pending) == 8


def test_service_finish_time():
    cfg = LlcConfig(bank_service_cycles=4, hit_latency=20)
    b = Bank(cfg)
    b.try_accept(req(0), 0)
    (comp,) = b.service(0)
    assert comp.finish_cycle == 24
    assert comp.request_tag == 0
    assert b.service(1) == [] and b.service(3) == []


def test_service_is_fifo():
    b = Bank(LlcConfig(bank_service_cycles=1, hit_latency=0))
    for i in range(3):
        b.try_accept(req(i), 0)
    tags = [b.service(t)[0].request_tag for t in range(3)]
    assert tags == [0, 1, 2]


def test_write_occupancy():
    b = Bank(LlcConfig(bank_service_cycles=2, hit_latency=10, write_service_cycles=5))
    b.try_accept(req(0, write=True), 0)
    b.try_accept(req(1), 0)
    assert b.service(0)[0].finish_cycle == 15
    assert b.service(4) == []
    assert b.service(5)[0].finish_cycle == 17


def test_write_defaults_to_read_occupancy():
    assert LlcConfig(bank_service_cycles=3).service_cycles(True) == 3


@pytest.mark.parametrize("kw", [{"bank_service_cycles": 0}, {"queue_depth": 0},
                                {"hit_latency": -1}, {"write_service_cycles": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LlcConfig(**kw)


def saturate(cfg, banks, cycles):
    """Offer one request per bank every cycle; return completions per bank."""
    bs = [Bank(cfg) for _ in range(banks)]
    done = [0] * banks
    tag = 0
    for t in range(cycles):
        for i, b in enumerate(bs):
            if not b.full:
                b.try_accept(req(tag, bank=i), t)
                tag += 1
            done[i] += len(b.service(t))
    return done


def test_throughput_ceiling():
    cfg = LlcConfig(bank_service_cycles=4, hit_latency=20)
    (n,) = saturate(cfg, 1, 4000)
    assert n == 1000


def test_parallel_banks_scale():
    cfg = LlcConfig(bank_service_cycles=2)
    one = sum(saturate(cfg, 1, 2000))
    four = sum(saturate(cfg, 4, 2000))
    assert four == 4 * one


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=200), st.integers(1, 5), st.integers(1, 8))
def test_no_loss_and_work_conserving(offers, service, depth):
    cfg = LlcConfig(bank_service_cycles=service, hit_latency=3, queue_depth=depth)
    b = Bank(cfg)
    accepted, completed, tag = set(), [], 0
    t = 0
    while t < len(offers) or b.pending:
        if t < len(offers) and offers[t]:
            if b.try_accept(req(tag), t):
                accepted.add(tag)
            tag += 1
        had_work = bool(b.pending) and t >= b.busy_until
        got = b.service(t)
        # an idle bank with queued work always starts one
        assert bool(got) == had_work
        completed += [c.request_tag for c in got]
        t += 1
    assert sorted(completed) == sorted(accepted)
    assert len(completed) == len(set(completed))
