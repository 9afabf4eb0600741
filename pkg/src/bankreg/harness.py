"""Experiment plans, suite execution and CSV reporting.

A plan file is a scenario file with three extra kinds of section::

    [plan]
    name = attack_2bank
    baseline = solo
    metrics = slowdown

    [variation.solo]
    core.1.enabled = false
    core.2.enabled = false

    [variation.same_bank]

    [check]
    isolated = diff_bank.0.slowdown <= 1.05
    ratio    = allbank.0.cycles / perbank.0.cycles >= 1.8

Variations run in declared order; every variation is the base scenario with
its overrides applied.
"""

import csv
import datetime
import io
import operator
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from bankreg.engine import run
from bankreg.scenario import ScenarioError, build_scenario, parse_raw, with_overrides

METRICS = ("slowdown", "throughput", "bank_histogram")

BASE_COLUMNS = [
    "suite", "variation", "policy", "num_banks", "rpr", "abr_domain0", "abr_domain1",
    "core", "domain", "cycles", "completed", "stall_reg", "stall_struct",
]


@dataclass
class Check:
    name: str
    expr: str
    line: int = None


@dataclass
class ExperimentPlan:
    name: str
    base: object  # RawDoc
    variations: list  # [(name, {"section.key": (value, line)})]
    baseline: str = None
    metrics: tuple = ("slowdown",)
    checks: list = field(default_factory=list)

    def __post_init__(self):
        names = [n for n, _ in self.variations]
        if not names:
            raise ScenarioError(f"plan {self.name!r} declares no variations")
        if len(set(names)) != len(names):
            raise ScenarioError(f"plan {self.name!r} has duplicate variation names")
        if self.baseline is not None and self.baseline not in names:
            raise ScenarioError(f"baseline {self.baseline!r} is not a declared variation")
        for m in self.metrics:
            if m not in METRICS:
                raise ScenarioError(f"unknown metric {m!r}; expected one of {METRICS}")

    def scenarios(self):
        """Yield ``(variation_name, Scenario)``; overrides are validated like file keys."""
        for name, overrides in self.variations:
            doc = with_overrides(self.base, overrides)
            s = build_scenario(doc)
            if s.name == "scenario":
                s = replace(s, name=self.name)
            yield name, s


def parse_plan(text: str, default_name="plan") -> ExperimentPlan:
    doc = parse_raw(text)
    plan_sec = doc.sections.get("plan", {})
    name = plan_sec["name"].value if "name" in plan_sec else default_name
    for key, entry in plan_sec.items():
        if key not in ("name", "baseline", "metrics"):
            raise ScenarioError("unknown key in [plan]", entry.line, key)
    variations = []
    checks = []
    base = doc.copy()
    for section, keys in doc.sections.items():
        kind, _, vname = section.partition(".")
        if kind == "variation":
            if not vname:
                raise ScenarioError("variation section needs a name", doc.header_lines[section])
            variations.append((vname, {k: (e.value, e.line) for k, e in keys.items()}))
        elif kind == "check":
            checks += [Check(k, e.value, e.line) for k, e in keys.items()]
        if kind in ("plan", "variation", "check"):
            del base.sections[section]
    if not variations:
        variations = [("base", {})]
    baseline = plan_sec["baseline"].value if "baseline" in plan_sec else None
    metrics = tuple(m.strip() for m in plan_sec["metrics"].value.split(",")) if "metrics" in plan_sec \
        else ("slowdown",)
    plan = ExperimentPlan(name, base, variations, baseline, metrics, checks)
    # surface override errors at parse time, with their line numbers
    for _ in plan.scenarios():
        pass
    return plan


def load_plan(path) -> ExperimentPlan:
    with open(path) as f:
        return parse_plan(f.read(), os.path.splitext(os.path.basename(path))[0])


def _run_one(args):
    scenario, trace = args
    return run(scenario, trace=trace)


@dataclass
class SuiteResult:
    plan: ExperimentPlan
    scenarios: dict
    results: dict
    rows: list
    num_banks: int

    def row(self, variation, core):
        for r in self.rows:
            if r["variation"] == variation and r["core"] == core:
                return r
        raise KeyError(f"no row for variation {variation!r} core {core}")

    def csv(self, timestamp=True) -> str:
        return to_csv(self.rows, self.num_banks, timestamp)


def run_suite(plan: ExperimentPlan, jobs: int = 1, trace: bool = False) -> SuiteResult:
    pairs = list(plan.scenarios())
    # baseline first so its result exists before anything is normalized; output keeps declared order
    order = sorted(range(len(pairs)), key=lambda i: pairs[i][0] != plan.baseline)
    work = [(pairs[i][1], trace) for i in order]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_run_one, work))
    else:
        out = [_run_one(w) for w in work]
    results = {pairs[i][0]: r for i, r in zip(order, out)}
    scenarios = dict(pairs)
    n_banks = max(s.llc.num_banks for s in scenarios.values())
    rows = []
    base = results.get(plan.baseline)
    for name, s in pairs:
        res = results[name]
        h = s.config_hash()
        for c in s.cores:
            if not c.enabled:
                continue
            cr = res.per_core[c.core_id]
            row = {
                "suite": plan.name,
                "variation": name,
                "policy": s.policy.value,
                "num_banks": s.llc.num_banks,
                "rpr": s.regulation_period,
                "abr_domain0": s.access_budget[0] if len(s.access_budget) > 0 else "",
                "abr_domain1": s.access_budget[1] if len(s.access_budget) > 1 else "",
                "core": c.core_id,
                "domain": c.domain,
                "cycles": cr.finish_cycle if cr.finished else res.cycles_elapsed,
                "completed": cr.completed,
                "stall_reg": cr.stall_cycles_regulatory,
                "stall_struct": cr.stall_cycles_structural,
            }
            hist = res.per_bank_access[c.core_id]
            for b in range(n_banks):
                row[f"bank{b}"] = hist[b] if b < len(hist) else ""
            row["slowdown"] = _slowdown_cell(plan, c, cr, base)
            row["config_hash"] = h
            rows.append(row)
    return SuiteResult(plan, scenarios, results, rows, n_banks)


def _slowdown_cell(plan, core, cr, base):
    if core.workload.total_iterations and not cr.finished:
        return "unfinished"
    if "slowdown" not in plan.metrics or base is None or not cr.finished:
        return ""
    ref = base.per_core.get(core.core_id)
    if ref is None or not ref.finished:
        return ""
    return f"{cr.finish_cycle / ref.finish_cycle:.4f}"


def columns(num_banks):
    return BASE_COLUMNS + [f"bank{b}" for b in range(num_banks)] + ["slowdown", "config_hash"]


def to_csv(rows, num_banks, timestamp=True) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {datetime.datetime.now().isoformat(timespec='seconds')}\n")
    w = csv.DictWriter(buf, fieldnames=columns(num_banks), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def csv_body(text: str) -> str:
    """CSV text without comment (timestamp) lines."""
    return "".join(line for line in text.splitlines(True) if not line.startswith("#"))


_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt, "==": operator.eq}
_CHECK = re.compile(r"^\s*(\S+)\s*(?:/\s*(\S+)\s*)?(<=|>=|==|<|>)\s*([-+0-9.eE]+)\s*$")


def _ref(suite, ref):
    try:
        variation, core, metric = ref.rsplit(".", 2)
        value = suite.row(variation, int(core))[metric]
    except (ValueError, KeyError) as e:
        raise ScenarioError(f"bad check reference {ref!r}: {e}") from None
    if value in ("", "unfinished"):
        raise ScenarioError(f"check reference {ref!r} has no value ({value or 'blank'})")
    return float(value)


def evaluate_checks(suite: SuiteResult):
    """Return ``[(check_name, passed, detail)]``."""
    out = []
    for chk in suite.plan.checks:
        m = _CHECK.match(chk.expr)
        if not m:
            raise ScenarioError(f"malformed check {chk.expr!r}", chk.line, chk.name)
        lhs, rhs, op, bound = m.groups()
        try:
            value = _ref(suite, lhs)
            if rhs:
                value /= _ref(suite, rhs)
        except ScenarioError as e:
            out.append((chk.name, False, str(e)))
            continue
        ok = _OPS[op](value, float(bound))
        out.append((chk.name, ok, f"{chk.expr.strip()}  (value {value:.4f})"))
    return out


def sweep_plan(text: str, param: str, values, name="sweep") -> ExperimentPlan:
    """Plan varying one ``section.key`` over ``values``; keeps the file's baseline variation if any."""
    plan = parse_plan(text, name)
    variations = []
    if plan.baseline is not None:
        variations = [v for v in plan.variations if v[0] == plan.baseline]
    for v in values:
        variations.append((f"{param}={v}", {param: (str(v), None)}))
    out = ExperimentPlan(plan.name, plan.base, variations,
                         plan.baseline if plan.baseline is not None else variations[0][0],
                         plan.metrics, [])
    for _ in out.scenarios():
        pass
    return out


@dataclass
class Profile:
    core: int
    counts: list
    cycles: int
    read_bw: float
    write_bw: float

    @property
    def accesses(self):
        return sum(self.counts)


def profile(scenario, core: int) -> Profile:
    """Per-bank access histogram and achieved bandwidth of one core (monitors reset at start)."""
    res = run(scenario)
    cr = res.per_core[core]
    seconds = res.cycles_elapsed / scenario.clock_hz
    return Profile(
        core=core,
        counts=list(res.per_bank_access[core]),
        cycles=res.cycles_elapsed,
        read_bw=cr.bytes_read / seconds if seconds else 0.0,
        write_bw=cr.bytes_written / seconds if seconds else 0.0,
    )
