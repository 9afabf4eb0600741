import pytest

from bankreg.engine import Scenario
from bankreg.regulator import Policy
from bankreg.scenario import (
    ScenarioError,
    format_scenario,
    parse_int,
    parse_raw,
    parse_scenario,
    validation_report,
    with_overrides,
    build_scenario,
)

MINIMAL = """
[regulator]
policy = perbank
rpr = 400

[domain.0]
abr = 16

[core.0]
workload = bandwidth
iterations = 100
"""


def test_defaults_filled():
    s = parse_scenario(MINIMAL)
    d = Scenario()
    assert s.llc == d.llc and s.bank_map == d.bank_map and s.partition == d.partition
    assert s.policy is Policy.PER_BANK
    assert s.access_budget == (16,)
    core = s.core(0)
    assert core.workload.wss == 128 * 1024 and core.workload.stride == 64
    assert core.max_outstanding == 8 and core.domain == 0 and not core.regulated


def test_report_echoes_bandwidth():
    report = validation_report(parse_scenario(MINIMAL))
    assert "640 MB/s" in report
    assert "effective" in report


def test_overlapping_partitions():
    text = MINIMAL + "\n[partition]\nvictim_base = 0\nvictim_size = 512K\nbest_effort_base = 256K\n"
    with pytest.raises(ScenarioError, match="overlap"):
        parse_scenario(text)


def test_unknown_key_reports_line():
    text = "[llc]\nnum_banks = 2\nbanks_per_slice = 4\n"
    with pytest.raises(ScenarioError) as e:
        parse_scenario(text)
    assert e.value.line == 3 and e.value.key == "banks_per_slice"
    assert "line 3" in str(e.value)


def test_unknown_section():
    with pytest.raises(ScenarioError, match=r"unknown section \[dram\]"):
        parse_raw("[dram]\nx = 1\n")


def test_bad_value_reports_line():
    with pytest.raises(ScenarioError) as e:
        parse_scenario("[core.0]\nworkload = bandwidth\nwss = lots\n")
    assert e.value.line == 3


def test_key_outside_section():
    with pytest.raises(ScenarioError, match="outside"):
        parse_raw("x = 1\n")


def test_domain_out_of_range():
    with pytest.raises(ScenarioError):
        parse_scenario("[regulator]\nnum_domains = 1\n[core.0]\ndomain = 1\nworkload = bandwidth\n")


def test_bank_map_mismatch():
    with pytest.raises(ScenarioError, match="bank_map.num_banks"):
        parse_scenario("[llc]\nnum_banks = 2\n[bank_map]\nnum_banks = 4\n")


def test_layout_shortfall_at_parse_time():
    text = "[core.0]\nworkload = bkpll\nwss = 512K\ntarget_bank = 0\n"
    with pytest.raises(ScenarioError, match="holds only"):
        parse_scenario(text)


@pytest.mark.parametrize("text, binary, value", [
    ("64K", True, 65536),
    ("1M", True, 1 << 20),
    ("1_000_000", False, 1_000_000),
    ("1G", False, 10**9),
    ("2k", False, 2000),
    ("0x40", False, 64),
])
def test_parse_int(text, binary, value):
    assert parse_int(text, binary) == value


def test_parse_int_rejects():
    with pytest.raises(ValueError):
        parse_int("12X")


def test_suffix_semantics_in_file():
    s = parse_scenario("[regulator]\nclock_hz = 2G\n[core.0]\nworkload = mempress\nwss = 32K\n")
    assert s.clock_hz == 2_000_000_000
    assert s.core(0).workload.wss == 32 * 1024


def test_format_round_trips():
    s = parse_scenario(MINIMAL + "\n[core.1]\nworkload = mempress\ntarget_bank = 1\n"
                       "region = best_effort\nwrite = true\n[run]\nseed = 9\n")
    text = format_scenario(s)
    assert parse_scenario(text) == s
    assert format_scenario(parse_scenario(text)) == text


def test_overrides_apply_and_validate():
    doc = parse_raw(MINIMAL)
    s = build_scenario(with_overrides(doc, {"domain.0.abr": ("32", None)}))
    assert s.access_budget == (32,)
    # the source document is untouched
    assert build_scenario(doc).access_budget == (16,)
    with pytest.raises(ScenarioError):
        with_overrides(doc, {"llc.frobnicate": ("1", 7)})
    with pytest.raises(ScenarioError):
        with_overrides(doc, {"abr": ("1", 7)})


def test_comments_and_blank_lines():
    s = parse_scenario("# header\n\n[domain.0]  \nabr = 8   # trailing\n")
    assert s.access_budget == (8,)
