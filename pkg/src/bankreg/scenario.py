"""Scenario file reader/writer.

Format::

    # comment
    [llc]
    num_banks = 2
    hit_latency = 16

    [domain.1]
    abr = 16

    [core.1]
    workload = mempress
    wss = 64K

Integers accept ``_`` separators and ``K``/``M``/``G`` suffixes.  Byte sizes
use powers of two; clock frequency and counts use powers of ten.  Unknown
sections or keys are errors.
"""

import re
from dataclasses import dataclass, field

from bankreg.address_map import BankMapConfig, PartitionConfig, Region
from bankreg.engine import CoreSpec, Scenario
from bankreg.memory import LlcConfig
from bankreg.regulator import Policy, bandwidth_of
from bankreg.workloads import DEFAULT_MAX_OUTSTANDING, KINDS, WorkloadSpec


class ScenarioError(ValueError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


_SUFFIX = re.compile(r"^(-?[0-9][0-9_]*|0x[0-9a-fA-F_]+)\s*([KMGkmg]?)$")


def parse_int(text: str, binary: bool = False) -> int:
    t = text.strip()
    m = _SUFFIX.match(t)
    if not m:
        raise ValueError(f"not an integer: {text!r}")
    num, suffix = m.groups()
    value = int(num.replace("_", ""), 0)
    if suffix:
        power = "KMG".index(suffix.upper()) + 1
        value *= (1024 if binary else 1000) ** power
    return value


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text):
    if text.strip().lower() in ("none", ""):
        return None
    return parse_int(text)


def _size(text):
    return parse_int(text, binary=True)


def _choice(options):
    def conv(text):
        t = text.strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return t
    return conv


# section kind -> key -> converter
SCHEMA = {
    "llc": {
        "num_banks": parse_int,
        "bank_service_cycles": parse_int,
        "write_service_cycles": _optional_int,
        "hit_latency": parse_int,
        "queue_depth": parse_int,
    },
    "bank_map": {
        "start_bit": parse_int,
        "line_size": _size,
        "num_banks": parse_int,
    },
    "partition": {
        "victim_base": _size,
        "victim_size": _size,
        "best_effort_base": _size,
        "best_effort_size": _size,
    },
    "regulator": {
        "policy": Policy.parse,
        "rpr": parse_int,
        "transaction_size": _size,
        "clock_hz": parse_int,
        "num_domains": parse_int,
    },
    "domain": {
        "abr": parse_int,
    },
    "core": {
        "workload": _choice(KINDS),
        "wss": _size,
        "target_bank": _optional_int,
        "write": parse_bool,
        "mlp": parse_int,
        "stride": _size,
        "iterations": parse_int,
        "max_outstanding": _optional_int,
        "domain": parse_int,
        "regulated": parse_bool,
        "region": _choice(("victim", "best_effort")),
        "offset": _size,
        "enabled": parse_bool,
    },
    "run": {
        "max_cycles": parse_int,
        "seed": parse_int,
        "measured_core": _optional_int,
        "name": str.strip,
    },
}

# sections that belong to experiment plans, passed through untouched
PLAN_SECTIONS = ("plan", "variation", "check")

_HEADER = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)(?:\.([A-Za-z0-9_]+))?\s*\]$")


@dataclass
class Entry:
    value: str
    line: int


@dataclass
class RawDoc:
    """Sections in file order: ``{"core.1": {"wss": Entry("64K", 12)}}``."""

    sections: dict = field(default_factory=dict)
    header_lines: dict = field(default_factory=dict)

    def copy(self) -> "RawDoc":
        return RawDoc(
            {s: dict(keys) for s, keys in self.sections.items()},
            dict(self.header_lines),
        )

    def set(self, section: str, key: str, value: str, line=None):
        _check_key(section, key, line)
        self.sections.setdefault(section, {})[key] = Entry(value, line)


def _section_kind(name: str, line=None):
    kind, _, index = name.partition(".")
    if kind in PLAN_SECTIONS:
        return kind, index
    if kind not in SCHEMA:
        raise ScenarioError(f"unknown section [{name}]", line)
    if kind in ("domain", "core"):
        if not index.isdigit():
            raise ScenarioError(f"section [{name}] needs a numeric index, e.g. [{kind}.0]", line)
    elif index:
        raise ScenarioError(f"section [{kind}] takes no index", line)
    return kind, index


def _check_key(section, key, line):
    kind, _ = _section_kind(section, line)
    if kind in PLAN_SECTIONS:
        return
    if key not in SCHEMA[kind]:
        raise ScenarioError(f"unknown key in [{section}]", line, key)


def parse_raw(text: str) -> RawDoc:
    doc = RawDoc()
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _HEADER.match(line)
            if not m:
                raise ScenarioError(f"malformed section header {raw.strip()!r}", lineno)
            current = m.group(1) + (f".{m.group(2)}" if m.group(2) else "")
            _section_kind(current, lineno)
            doc.sections.setdefault(current, {})
            doc.header_lines.setdefault(current, lineno)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if current is None:
            raise ScenarioError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ScenarioError("empty key", lineno)
        doc.set(current, key, value, lineno)
    return doc


def _get(doc, section, key, default):
    entry = doc.sections.get(section, {}).get(key)
    if entry is None:
        return default
    kind, _ = _section_kind(section)
    try:
        return SCHEMA[kind][key](entry.value)
    except ValueError as e:
        raise ScenarioError(str(e), entry.line, f"{section}.{key}") from None


def _build(what, section, doc, fn):
    try:
        return fn()
    except ScenarioError:
        raise
    except (ValueError, KeyError) as e:
        msg = e.args[0] if e.args else str(e)
        raise ScenarioError(f"invalid {what}: {msg}", doc.header_lines.get(section), section) from None


def _indexed(doc, kind):
    out = []
    for name in doc.sections:
        k, idx = _section_kind(name)
        if k == kind:
            out.append(int(idx))
    return sorted(out)


def build_scenario(doc: RawDoc) -> Scenario:
    d = Scenario()

    llc_banks = _get(doc, "llc", "num_banks", d.llc.num_banks)
    llc = _build("llc", "llc", doc, lambda: LlcConfig(
        num_banks=llc_banks,
        bank_service_cycles=_get(doc, "llc", "bank_service_cycles", d.llc.bank_service_cycles),
        hit_latency=_get(doc, "llc", "hit_latency", d.llc.hit_latency),
        queue_depth=_get(doc, "llc", "queue_depth", d.llc.queue_depth),
        write_service_cycles=_get(doc, "llc", "write_service_cycles", d.llc.write_service_cycles),
    ))
    map_banks = _get(doc, "bank_map", "num_banks", llc_banks)
    if map_banks != llc_banks:
        line = doc.sections["bank_map"]["num_banks"].line
        raise ScenarioError(f"bank_map.num_banks={map_banks} but llc.num_banks={llc_banks}", line,
                            "bank_map.num_banks")
    bank_map = _build("bank_map", "bank_map", doc, lambda: BankMapConfig(
        start_bit=_get(doc, "bank_map", "start_bit", d.bank_map.start_bit),
        num_banks=llc_banks,
        line_size=_get(doc, "bank_map", "line_size", d.bank_map.line_size),
    ))

    dp = d.partition
    vb = _get(doc, "partition", "victim_base", dp.victim.base)
    vs = _get(doc, "partition", "victim_size", dp.victim.size)
    bb = _get(doc, "partition", "best_effort_base", dp.best_effort.base)
    bs = _get(doc, "partition", "best_effort_size", dp.best_effort.size)
    partition = _build("partition", "partition", doc, lambda: PartitionConfig(
        Region(vb, vb + vs), Region(bb, bb + bs)))

    core_ids = _indexed(doc, "core")
    domain_ids = _indexed(doc, "domain")
    core_domains = [_get(doc, f"core.{c}", "domain", 0) for c in core_ids]
    inferred = max([1] + [i + 1 for i in domain_ids] + [x + 1 for x in core_domains])
    num_domains = _get(doc, "regulator", "num_domains", inferred)
    if num_domains < inferred:
        raise ScenarioError(f"num_domains={num_domains} but domain index {inferred - 1} is used",
                            doc.header_lines.get("regulator"), "regulator.num_domains")
    budgets = tuple(_get(doc, f"domain.{i}", "abr", 0) for i in range(num_domains))

    cores = []
    for c in core_ids:
        sec = f"core.{c}"
        kind = _get(doc, sec, "workload", "bkpll")
        workload = _build("workload", sec, doc, lambda: WorkloadSpec(
            kind=kind,
            wss=_get(doc, sec, "wss", _default_wss(kind)),
            target_bank=_get(doc, sec, "target_bank", None),
            is_write=_get(doc, sec, "write", False),
            mlp=_get(doc, sec, "mlp", 4 if kind == "mempress" else 8),
            stride=_get(doc, sec, "stride", bank_map.line_size),
            total_iterations=_get(doc, sec, "iterations", 0),
        ))
        cores.append(CoreSpec(
            core_id=c,
            workload=workload,
            domain=_get(doc, sec, "domain", 0),
            regulated=_get(doc, sec, "regulated", False),
            region=_get(doc, sec, "region", "victim"),
            offset=_get(doc, sec, "offset", 0),
            max_outstanding=_get(doc, sec, "max_outstanding", DEFAULT_MAX_OUTSTANDING[kind]),
            enabled=_get(doc, sec, "enabled", True),
        ))

    scenario = _build("scenario", "run", doc, lambda: Scenario(
        llc=llc,
        bank_map=bank_map,
        partition=partition,
        policy=_get(doc, "regulator", "policy", d.policy),
        regulation_period=_get(doc, "regulator", "rpr", d.regulation_period),
        access_budget=budgets,
        transaction_size=_get(doc, "regulator", "transaction_size", d.transaction_size),
        clock_hz=_get(doc, "regulator", "clock_hz", d.clock_hz),
        cores=tuple(cores),
        max_cycles=_get(doc, "run", "max_cycles", d.max_cycles),
        seed=_get(doc, "run", "seed", d.seed),
        measured_core=_get(doc, "run", "measured_core", None),
        name=_get(doc, "run", "name", d.name),
    ))
    for c in cores:
        sec = f"core.{c.core_id}"
        _build(f"core {c.core_id}", sec, doc, lambda: _check_core(scenario, c))
    _build("scenario", "run", doc, scenario.validate)
    return scenario


def _default_wss(kind):
    return 64 * 1024 if kind == "mempress" else 128 * 1024


def _check_core(scenario, core):
    # builds the layout once so region/bank shortfalls surface at parse time
    from bankreg.workloads import CoreModel
    if core.enabled:
        CoreModel(core.core_id, core.workload, scenario.core_region(core), scenario.bank_map,
                  core.max_outstanding, seed=scenario.seed)


def parse_scenario(text: str) -> Scenario:
    return build_scenario(parse_raw(text))


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return parse_scenario(f.read())


def with_overrides(doc: RawDoc, overrides: dict) -> RawDoc:
    """Apply ``{"section.key": value}`` overrides to a copy of ``doc``."""
    out = doc.copy()
    for dotted, (value, line) in overrides.items():
        section, _, key = dotted.rpartition(".")
        if not section:
            raise ScenarioError(f"override {dotted!r} must be written section.key", line, dotted)
        kind, _ = _section_kind(section, line)
        if kind in PLAN_SECTIONS:
            raise ScenarioError(f"override {dotted!r} targets a plan section", line, dotted)
        out.set(section, key, value, line)
        out.header_lines.setdefault(section, line)
    return out


def _fmt_size(n):
    for suffix, unit in (("G", 1 << 30), ("M", 1 << 20), ("K", 1 << 10)):
        if n and n % unit == 0:
            return f"{n // unit}{suffix}"
    return str(n)


def format_scenario(s: Scenario) -> str:
    """Full effective configuration, every default spelled out.  Parses back to ``s``."""
    opt = lambda v: "none" if v is None else str(v)
    lines = [
        "[llc]",
        f"num_banks = {s.llc.num_banks}",
        f"bank_service_cycles = {s.llc.bank_service_cycles}",
        f"write_service_cycles = {opt(s.llc.write_service_cycles)}",
        f"hit_latency = {s.llc.hit_latency}",
        f"queue_depth = {s.llc.queue_depth}",
        "",
        "[bank_map]",
        f"start_bit = {s.bank_map.start_bit}",
        f"line_size = {s.bank_map.line_size}",
        "",
        "[partition]",
        f"victim_base = {_fmt_size(s.partition.victim.base)}",
        f"victim_size = {_fmt_size(s.partition.victim.size)}",
        f"best_effort_base = {_fmt_size(s.partition.best_effort.base)}",
        f"best_effort_size = {_fmt_size(s.partition.best_effort.size)}",
        "",
        "[regulator]",
        f"policy = {s.policy.value}",
        f"rpr = {s.regulation_period}",
        f"transaction_size = {s.transaction_size}",
        f"clock_hz = {s.clock_hz}",
        f"num_domains = {s.num_domains}",
    ]
    for d, abr in enumerate(s.access_budget):
        lines += ["", f"[domain.{d}]", f"abr = {abr}"]
    for c in s.cores:
        w = c.workload
        lines += [
            "",
            f"[core.{c.core_id}]",
            f"workload = {w.kind}",
            f"wss = {_fmt_size(w.wss)}",
            f"target_bank = {opt(w.target_bank)}",
            f"write = {str(w.is_write).lower()}",
            f"mlp = {w.mlp}",
            f"stride = {w.stride}",
            f"iterations = {w.total_iterations}",
            f"max_outstanding = {opt(c.max_outstanding)}",
            f"domain = {c.domain}",
            f"regulated = {str(c.regulated).lower()}",
            f"region = {c.region}",
            f"offset = {_fmt_size(c.offset)}",
            f"enabled = {str(c.enabled).lower()}",
        ]
    lines += [
        "",
        "[run]",
        f"name = {s.name}",
        f"max_cycles = {s.max_cycles}",
        f"seed = {s.seed}",
        f"measured_core = {opt(s.measured_core)}",
    ]
    return "\n".join(lines) + "\n"


def _fmt_rate(bps):
    if bps >= 10**9:
        return f"{bps / 1e9:g} GB/s"
    if bps >= 10**6:
        return f"{bps / 1e6:g} MB/s"
    return f"{bps} B/s"


def validation_report(s: Scenario) -> str:
    """Human-readable summary of the per-domain bandwidth each budget grants."""
    lines = [f"scenario {s.name}: policy {s.policy.value}, {s.llc.num_banks} banks, "
             f"rpr {s.regulation_period} cycles (effective window {s.regulation_period + 1})"]
    scope = "per bank" if s.policy is Policy.PER_BANK else "all banks"
    for d, abr in enumerate(s.access_budget):
        bw = bandwidth_of(abr, s.regulation_period, s.transaction_size, s.clock_hz)
        eff = bandwidth_of(abr, s.regulation_period + 1, s.transaction_size, s.clock_hz)
        members = [c.core_id for c in s.cores if c.domain == d]
        lines.append(f"  domain {d}: abr {abr} -> {_fmt_rate(bw)} {scope} "
                     f"(effective {_fmt_rate(eff)}), cores {members}")
    return "\n".join(lines)
