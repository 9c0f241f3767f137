from __future__ import annotations

from dataclasses import dataclass, field

from src.brep.model import BRep


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str  # "face" | "edge" | "coedge"
    entity_id: int
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.rule} at {self.entity} {self.entity_id}"
        return f"{text}: {self.detail}" if self.detail else text


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> list[str]:
        return [v.rule for v in self.violations]

    def add(self, rule: str, entity: str, entity_id: int, detail: str = "") -> None:
        self.violations.append(Violation(rule, entity, entity_id, detail))


def _check_ids(b: BRep, report: ValidationReport) -> None:
    for entity, items in (("face", b.faces), ("edge", b.edges), ("coedge", b.coedges)):
        for index, item in enumerate(items):
            if item.id != index:
                report.add("dense ids", entity, item.id, f"expected id {index}")


def _check_references(b: BRep, report: ValidationReport) -> bool:
    """Report out-of-range references. Returns False when traversal is unsafe."""
    n_f, n_e, n_c = b.n_faces, b.n_edges, b.n_coedges
    before = len(report.violations)
    for c in b.coedges:
        for name, ref, bound in (
            ("edge", c.edge_id, n_e),
            ("face", c.face_id, n_f),
            ("next", c.next_id, n_c),
            ("prev", c.prev_id, n_c),
            ("mate", c.mate_id, n_c),
        ):
            if not 0 <= ref < bound:
                report.add("dangling reference", "coedge", c.id, f"{name} -> {ref}")
    for e in b.edges:
        if len(e.coedge_ids) != 2:
            report.add("edge arity", "edge", e.id, f"{len(e.coedge_ids)} coedges")
        for ref in e.coedge_ids:
            if not 0 <= ref < n_c:
                report.add("dangling reference", "edge", e.id, f"coedge -> {ref}")
    for f in b.faces:
        for loop in f.loops:
            for ref in loop:
                if not 0 <= ref < n_c:
                    report.add("dangling reference", "face", f.id, f"coedge -> {ref}")
    return len(report.violations) == before


def _check_faces(b: BRep, report: ValidationReport) -> None:
    owner: dict[int, int] = {}
    for f in b.faces:
        if not f.loops:
            report.add("empty face", "face", f.id)
        for loop in f.loops:
            if not loop:
                report.add("empty loop", "face", f.id)
            for cid in loop:
                if cid in owner:
                    report.add("disjoint loops", "coedge", cid, f"listed by faces {owner[cid]} and {f.id}")
                    continue
                owner[cid] = f.id
                if b.coedges[cid].face_id != f.id:
                    report.add("face ownership", "coedge", cid, f"face {b.coedges[cid].face_id} != loop owner {f.id}")
    for c in b.coedges:
        if c.id not in owner:
            report.add("face ownership", "coedge", c.id, "not listed in any loop")


def _check_loops(b: BRep, report: ValidationReport) -> None:
    for f in b.faces:
        for loop in f.loops:
            # Declared cycle must match next pointers; one violation per broken loop.
            for i, cid in enumerate(loop):
                expected = loop[(i + 1) % len(loop)]
                if b.coedges[cid].next_id != expected:
                    report.add("loop closure", "coedge", cid, f"next {b.coedges[cid].next_id} != {expected}")
                    break
    for c in b.coedges:
        if b.coedges[c.next_id].prev_id != c.id:
            report.add("next/prev inverse", "coedge", c.id, f"prev(next) = {b.coedges[c.next_id].prev_id}")


def _check_mates(b: BRep, report: ValidationReport) -> None:
    self_mated = {c.id for c in b.coedges if c.mate_id == c.id}
    for cid in sorted(self_mated):
        report.add("mate involution", "coedge", cid, "coedge is its own mate")
    for c in b.coedges:
        if c.id in self_mated:
            continue
        mate = b.coedges[c.mate_id]
        if mate.mate_id != c.id:
            report.add("mate involution", "coedge", c.id, f"mate {c.mate_id} points to {mate.mate_id}")
            continue
        if mate.face_id == c.face_id:
            report.add("mate faces differ", "coedge", c.id, f"both on face {c.face_id}")
        if mate.reversed == c.reversed:
            report.add("mate direction", "coedge", c.id, "mates share the reversed flag")
        if mate.edge_id != c.edge_id:
            report.add("edge coedges", "coedge", c.id, f"mate on edge {mate.edge_id}, self on {c.edge_id}")
    for e in b.edges:
        if len(e.coedge_ids) != 2:
            continue
        a, c = e.coedge_ids
        ca, cc = b.coedges[a], b.coedges[c]
        if ca.edge_id != e.id or cc.edge_id != e.id or ca.mate_id != c:
            report.add("edge coedges", "edge", e.id, f"coedges {a}, {c} are not a mate pair of this edge")


def _check_labels(b: BRep, report: ValidationReport) -> None:
    k_t = len(b.vocabulary)
    for f in b.faces:
        if f.labels is None:
            continue
        if not 0 <= f.labels.op_type < k_t:
            report.add("op_type range", "face", f.id, f"{f.labels.op_type} not in [0, {k_t})")
        if f.labels.op_step < 0:
            report.add("op_step range", "face", f.id, f"{f.labels.op_step} < 0")


def validate_topology(b: BRep) -> ValidationReport:
    """Check every structural B-Rep invariant; violations are data, never raised."""
    report = ValidationReport()
    _check_ids(b, report)
    if report.violations or not _check_references(b, report):
        return report
    _check_faces(b, report)
    _check_loops(b, report)
    _check_mates(b, report)
    _check_labels(b, report)
    if sum(len(loop) for f in b.faces for loop in f.loops) != b.n_coedges and report.ok:
        report.add("coedge count", "face", 0, "loop sizes do not sum to N_c")
    if b.n_coedges != 2 * b.n_edges and report.ok:
        report.add("coedge count", "edge", 0, f"N_c={b.n_coedges} != 2*N_e={2 * b.n_edges}")
    return report
