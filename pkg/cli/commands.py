"""
Verification Commands

Each command runs one family of checks and returns a Report of assertion
records. Toolkit errors raised by a check become failed records carrying the
error, so a cap hit on one n does not hide the results for the others.

Usage:
    from cli import commands
    from models.report_model import RunConfig

    report = commands.cmd_verify_theorem1(RunConfig(command="verify-theorem1", n_values=[1, 2]))
    print("\\n".join(report.summary_lines()))
"""

from typing import Callable, Optional

import structlog
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from models.constraint_model import AQIConstraint
from models.report_model import AssertionRecord, Report, RunConfig
from services import classgroup, fpgroup, metrics, pcgroup, pgen, pquotient, sl2
from services.abelian import AbelianInvariants
from services.config import get_settings
from services.errors import ToolkitError
from services.tracing import start_span

logger = structlog.get_logger(__name__)

Emit = Callable[[str], None]

SL2_CHECKS = ("lemma2", "lemma3", "series", "identities")


def _measured(name: str, anchor: str, value) -> AssertionRecord:
    return AssertionRecord(name=name, anchor=anchor, expected="measured", actual=str(value), passed=True)


def _multiset(items) -> str:
    return "{" + ", ".join(str(a) for a in sorted(items)) + "}"


def _finish(report: Report) -> Report:
    report.timings = metrics.get_timings()
    failed = sum(1 for r in report.records if not r.passed)
    logger.info("command_finished", command=report.command, records=len(report.records), failed=failed)
    return report


@cached(LRUCache(maxsize=8), key=lambda n, order_cap: hashkey(n, order_cap))
def _gn_quotient(n: int, order_cap: int) -> pquotient.PQuotientResult:
    return pquotient.p_quotient(fpgroup.gn_presentation(n), 2 * n + 3, order_cap=order_cap)


def cmd_verify_theorem1(config: RunConfig) -> Report:
    """
    Order, class, derived length and sigma structure of G_n

    Args:
        config: Run configuration; n_values selects the groups

    Returns:
        Report with, per n, the stabilization of the p-quotient, |G_n|,
        nilpotency class, derived length, abelianization, the sigma
        automorphism and the Lemma 4 comparison with H_n

    Examples:
        n=1 -> order 3^5, class 3, derived length 2
        n=4 -> order 3^14, class 9, derived length 3
    """
    report = Report(command="verify-theorem1", config=config)
    with start_span("cmd_verify_theorem1", {"n_values": str(config.n_values)}):
        for n in config.n_values:
            try:
                with metrics.timed("commands", f"theorem1_n{n}"):
                    result = _gn_quotient(n, config.max_order)
                group = result.quotient
                report.add(AssertionRecord.verdict(f"G_{n}: p-quotient stabilizes", "Thm 1(i)", result.stabilized))
                report.add(AssertionRecord.check(f"|G_{n}|", "Thm 1(i)", 3 ** (3 * n + 2), group.order))
                report.add(AssertionRecord.check(f"class of G_{n}", "Thm 1(ii)", 2 * n + 1, group.nilpotency_class()))
                report.add(AssertionRecord.check(
                    f"derived length of G_{n}", "Thm 1(iii)", (3 * n + 3).bit_length() - 1, group.derived_length()
                ))
                report.add(_measured(f"p-class of G_{n}", "Thm 1", group.p_class()))
                report.add(AssertionRecord.check(
                    f"3-part of G_{n}^ab from relators", "Schur-sigma (1)", AbelianInvariants((3, 3)),
                    fpgroup.abelian_invariants(fpgroup.gn_presentation(n), prime=3),
                ))
                report.add(AssertionRecord.check(
                    f"G_{n}^ab from pc presentation", "Schur-sigma (1)", AbelianInvariants((3, 3)), group.abelian_invariants()
                ))
                x, y = result.epimorphism
                report.add(AssertionRecord.verdict(
                    f"x -> x^-1, y -> y^-1 is an automorphism of G_{n}", "Schur-sigma (3)",
                    pcgroup.verify_sigma_automorphism(group, x, y),
                ))
                lemma = pquotient.lemma1_check(n)
                report.add(AssertionRecord.check(f"|<x^3>^G_{n}|", "Lemma 4", 3, lemma.kernel_order))
                report.add(AssertionRecord.verdict(f"<x^3>^G_{n} central", "Lemma 1", lemma.kernel_central))
                report.add(AssertionRecord.check(f"|G_{n}| / |H_{n}|", "Lemma 4", 3, lemma.gn_order // lemma.hn_order))
                report.add(AssertionRecord.verdict(f"G_{n} / <x^3> = H_{n}", "Lemma 1", lemma.quotient_matches))
            except ToolkitError as e:
                logger.warning("theorem1_check_failed", n=n, error=str(e))
                report.add(AssertionRecord.failure(f"G_{n}", "Thm 1", e))
    return _finish(report)


def cmd_pquotient(config: RunConfig, text: str, max_class: int, emit: Optional[Emit] = None) -> Report:
    """
    p-quotient of an arbitrary presentation in the text format

    The pc presentation, with its provenance header, goes to emit.
    """
    report = Report(command="pquotient", config=config)
    presentation = fpgroup.parse_presentation(text)
    with start_span("cmd_pquotient", {"max_class": max_class}):
        try:
            result = pquotient.p_quotient(presentation, max_class, order_cap=config.max_order)
        except ToolkitError as e:
            report.add(AssertionRecord.failure("p-quotient", "p-quotient", e))
            return _finish(report)
    report.add(_measured("quotient order", "p-quotient", f"3^{result.quotient.num_gens}"))
    report.add(_measured("p-class", "p-quotient", result.p_class))
    report.add(_measured("stabilized", "p-quotient", str(result.stabilized).lower()))
    report.add(AssertionRecord.verdict("relators vanish in quotient", "p-quotient", result.relators_vanish()))
    report.add(AssertionRecord.verdict("pc presentation consistent", "p-quotient", result.quotient.is_consistent()))
    if emit:
        emit(result.format())
    return _finish(report)


def cmd_descend(config: RunConfig, constraint: Optional[AQIConstraint] = None, emit: Optional[Emit] = None) -> Report:
    """
    Constrained descendant search from the elementary abelian group of order 9

    Without a constraint the search uses the three-[3,9] target and the
    report checks that exactly the groups Q1 and Q2 remain. Terminal groups
    are passed to emit in the pc text format.
    """
    report = Report(command="descend", config=config)
    default = constraint is None
    constraint = constraint or pgen.identify3grp_constraint()
    with start_span("cmd_descend", {"target": constraint.to_text()}):
        try:
            with metrics.timed("commands", "descend"):
                result = pgen.descendant_tree(pcgroup.elementary_abelian(2), constraint, order_cap=config.max_order)
        except ToolkitError as e:
            report.add(AssertionRecord.failure("descendant search", "§3", e))
            return _finish(report)

    report.add(_measured("nodes per p-class", "§3", result.nodes_per_class))
    report.add(_measured("pruned per p-class", "§3", result.pruned_per_class))
    for i, node in enumerate(result.terminal_nodes, start=1):
        report.add(_measured(f"terminal group {i}", "§3", f"order 3^{node.group.num_gens}, p-class {node.p_class}"))
        if emit:
            header = [f"terminal group {i} of descendant search"]
            header += [f"target {line}" for line in constraint.to_text().splitlines()]
            emit(pcgroup.format_pc(node.group, header))

    if default:
        _check_two_candidates(report, result.groups, config)
    return _finish(report)


def _check_two_candidates(report: Report, groups: list, config: RunConfig):
    report.add(AssertionRecord.check("number of terminal groups", "§3 two candidates", 2, len(groups)))
    report.add(AssertionRecord.check("orders of terminal groups", "§3 two candidates", [243, 243], [g.order for g in groups]))
    try:
        named = {"Q1": pcgroup.q1(), "Q2": pcgroup.q2()}
        for name, target in named.items():
            found = any(g.order == target.order and pcgroup.isomorphic(g, target) for g in groups)
            report.add(AssertionRecord.verdict(f"{name} among terminal groups", "§3 two candidates", found))
        g1 = _gn_quotient(1, config.max_order).quotient
        report.add(AssertionRecord.verdict("Q1 = G_1", "Prop. identify3grp", pcgroup.isomorphic(named["Q1"], g1)))
        report.add(AssertionRecord.check("relation rank of Q1", "§3 Schur multiplier", 2, pquotient.relation_rank(named["Q1"])))
        report.add(AssertionRecord.check("relation rank of Q2", "§3 Schur multiplier", 3, pquotient.relation_rank(named["Q2"])))
        printed = pgen.aqi_fingerprint(pcgroup.q2_as_printed())
        report.add(AssertionRecord.check(
            "Q2 with x1^3 = x4^2 meets the target", "§3 misprint", False,
            pgen.matches_exactly(printed, pgen.identify3grp_constraint()),
        ))
    except ToolkitError as e:
        report.add(AssertionRecord.failure("terminal group identification", "§3", e))


def cmd_sl2(config: RunConfig, check: str, precision: int, n: int) -> Report:
    """
    One family of SL_2(Z_3) truncation checks

    Args:
        check: lemma2, lemma3, series or identities
        precision: M, computations are modulo 3^M
        n: Index of H_n for the lemma3 check
    """
    if check not in SL2_CHECKS:
        raise ValueError(f"unknown sl2 check {check!r}, expected one of {SL2_CHECKS}")
    report = Report(command=f"sl2 {check}", config=config)
    settings = get_settings()
    with start_span("cmd_sl2", {"check": check, "precision": precision}):
        try:
            if check == "lemma2":
                report.extend(sl2.lemma2_report(precision, samples=1000, seed=config.seed, cap=settings.bfs_cap))
            elif check == "lemma3":
                report.extend(sl2.lemma3_report(n, precision, cap=settings.bfs_cap))
            elif check == "series":
                report.extend(sl2.series_formula_check(precision, cap=settings.bfs_cap))
                report.extend(sl2.nk_commutator_report(precision, cap=settings.bfs_cap))
            else:
                report.extend(sl2.identities_report(samples=100, seed=config.seed))
        except ToolkitError as e:
            logger.warning("sl2_check_failed", check=check, precision=precision, error=str(e))
            report.add(AssertionRecord.failure(f"sl2 {check} (M={precision})", "Lemma 2", e))
    return _finish(report)


def cmd_classgroup(config: RunConfig, dmin: int, dmax: int, target: AbelianInvariants) -> Report:
    """
    Scan fundamental discriminants in [dmin, dmax] for a 3-Sylow structure
    and confirm Cl_3 = [3,3] for both listed sets of discriminants
    """
    report = Report(command="classgroup", config=config)
    with start_span("cmd_classgroup", {"dmin": dmin, "dmax": dmax, "target": str(target)}):
        try:
            rows = classgroup.scan(dmin, dmax, target, threads=config.threads)
        except ToolkitError as e:
            report.add(AssertionRecord.failure("class group scan", "Corollary", e))
            return _finish(report)
    if config.csv_path:
        classgroup.write_scan_csv(rows, config.csv_path)
    report.add(_measured(f"discriminants in [{dmin}, {dmax}] with Cl_3 = {target}", "Corollary", len(rows)))

    lists = (("first list", classgroup.G1_DISCRIMINANTS), ("second list", classgroup.HIGHER_DISCRIMINANTS))
    for label, listed in lists:
        wrong = []
        for d in listed:
            try:
                sylow = classgroup.sylow3(classgroup.group_structure(d))
            except ToolkitError as e:
                wrong.append(f"{d}: {type(e).__name__}")
                continue
            if sylow != AbelianInvariants((3, 3)):
                wrong.append(f"{d}: {sylow}")
        report.add(AssertionRecord.verdict(
            f"{label}: Cl_3 = [3, 3] for all {len(listed)}", "Corollary", not wrong, "; ".join(wrong)
        ))
        if target == AbelianInvariants((3, 3)):
            in_range = [d for d in listed if dmin <= d <= dmax]
            missing = classgroup.list_membership(rows, in_range)
            report.add(AssertionRecord.check(f"{label}: missing from scan", "Corollary", [], missing))
    return _finish(report)


def cmd_aqi(config: RunConfig) -> Report:
    """
    Abelian quotient invariants of the maximal subgroups of G_n

    Examples:
        n=1 -> {[3, 3, 3], [3, 9], [3, 9], [3, 9]}
        n>=2 -> {[3, 3, 3], [3, 3, 3], [3, 3, 3], [3, 9]}
    """
    report = Report(command="aqi", config=config)
    with start_span("cmd_aqi", {"n_values": str(config.n_values)}):
        for n in config.n_values:
            constraint = pgen.identify3grp_constraint() if n == 1 else pgen.higher_constraint()
            anchor = "Prop. identify3grp" if n == 1 else "Prop. n >= 2"
            try:
                whole, maxima = pgen.aqi_fingerprint(_gn_quotient(n, config.max_order).quotient)
            except ToolkitError as e:
                report.add(AssertionRecord.failure(f"AQI of G_{n}", anchor, e))
                continue
            report.add(AssertionRecord.check(f"G_{n}^ab", anchor, constraint.whole, whole))
            report.add(AssertionRecord.check(
                f"AQI of maximal subgroups of G_{n}", anchor, _multiset(constraint.maximal), _multiset(maxima)
            ))
    return _finish(report)


def cmd_report_all(config: RunConfig) -> Report:
    """Every command at its default parameters, in one report"""
    settings = get_settings()
    report = Report(command="report-all", config=config)
    parts = [cmd_verify_theorem1(config), cmd_aqi(config), cmd_descend(config)]
    for precision in (2, 3):
        parts.append(cmd_sl2(config, "lemma2", precision, 1))
    for n in (1, 2, 3) if settings.extended else (1, 2):
        parts.append(cmd_sl2(config, "lemma3", n + 2, n))
    parts.append(cmd_sl2(config, "series", 4, 1))
    parts.append(cmd_sl2(config, "identities", 4, 1))
    parts.append(cmd_classgroup(config, -50000, -1, AbelianInvariants((3, 3))))
    for part in parts:
        report.extend(part.records)
    return _finish(report)
