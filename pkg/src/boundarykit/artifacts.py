"""Three-track artifact store: behaviors, knowledge graph, skills.

Artifacts load from JSON document bundles (a directory of documents or a
single archive file), are indexed by id and retrieval tag, and never mutate
after load. Integrity linting enumerates broken behavior references, dangling
knowledge links, and orphaned nodes; retrieval refuses to serve stores that
fail the lint.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

ID_PATTERN = re.compile(r"^[a-z0-9-]+$")


class BundleParseError(Exception):
    pass


class DuplicateIdError(BundleParseError):
    def __init__(self, artifact_id: str):
        super().__init__(f"duplicate artifact id: {artifact_id!r}")
        self.artifact_id = artifact_id


class UnknownSkillError(KeyError):
    pass


class DanglingReferenceError(Exception):
    def __init__(self, skill_id: str, ref_kind: str, missing_id: str):
        super().__init__(f"skill {skill_id!r}: {ref_kind} reference {missing_id!r} does not resolve")
        self.skill_id = skill_id
        self.ref_kind = ref_kind
        self.missing_id = missing_id


class NonTraversableStoreError(Exception):
    pass


class Enforcement(str, Enum):
    HARD_GATE = "hard_gate"
    HUMAN_CONFIRM = "human_confirm"
    ADVISORY = "advisory"


class NodeKind(str, Enum):
    SYSTEM = "system"
    DATASET = "dataset"
    DOMAIN_ENTITY = "domain_entity"
    PLATFORM = "platform"
    CONVENTION = "convention"


class EdgeRelation(str, Enum):
    PART_OF = "part_of"
    REFERENCES = "references"
    SUPPORTS_SKILL = "supports_skill"


@dataclass(frozen=True)
class Behavior:
    id: str
    title: str
    constraint_text: str
    enforcement: Enforcement
    applies_to: frozenset[str]
    version: int

    def to_document(self) -> dict:
        return {
            "track": "behavior",
            "id": self.id,
            "title": self.title,
            "constraint_text": self.constraint_text,
            "enforcement": self.enforcement.value,
            "applies_to": sorted(self.applies_to),
            "version": self.version,
        }


@dataclass(frozen=True)
class KnowledgeNode:
    id: str
    kind: NodeKind
    attributes: dict
    retrieval_tags: frozenset[str]

    def to_document(self) -> dict:
        return {
            "track": "knowledge_node",
            "id": self.id,
            "kind": self.kind.value,
            "attributes": dict(self.attributes),
            "retrieval_tags": sorted(self.retrieval_tags),
        }


@dataclass(frozen=True)
class KnowledgeEdge:
    src: str
    dst: str
    relation: EdgeRelation

    def to_document(self) -> dict:
        return {"track": "knowledge_edge", "from": self.src, "to": self.dst, "relation": self.relation.value}


@dataclass(frozen=True)
class Step:
    kind: str  # "tool" or "skill"
    target: str
    params: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        doc: dict = {"kind": self.kind, "target": self.target}
        if self.params:
            doc["params"] = dict(self.params)
        return doc


@dataclass(frozen=True)
class ExpectedOutcome:
    validator: str
    verdict: str

    def to_document(self) -> dict:
        return {"validator": self.validator, "verdict": self.verdict}


@dataclass(frozen=True)
class Skill:
    id: str
    name: str
    prerequisites: tuple[str, ...]
    behavior_gates: tuple[str, ...]
    recipe: tuple[Step, ...]
    expected_outcomes: tuple[ExpectedOutcome, ...]
    required_capabilities: frozenset[str]

    def to_document(self) -> dict:
        return {
            "track": "skill",
            "id": self.id,
            "name": self.name,
            "prerequisites": list(self.prerequisites),
            "behavior_gates": list(self.behavior_gates),
            "recipe": [s.to_document() for s in self.recipe],
            "expected_outcomes": [o.to_document() for o in self.expected_outcomes],
            "required_capabilities": sorted(self.required_capabilities),
        }


@dataclass(frozen=True)
class ResolvedSkill:
    skill: Skill
    behaviors: tuple[Behavior, ...]
    prerequisites: tuple[KnowledgeNode, ...]


@dataclass(frozen=True)
class IntegrityReport:
    broken_behavior_refs: tuple[tuple[str, str], ...]
    missing_knowledge_links: tuple[tuple[str, str], ...]
    orphan_nodes: tuple[str, ...]

    @property
    def traversable(self) -> bool:
        return not (self.broken_behavior_refs or self.missing_knowledge_links or self.orphan_nodes)

    @property
    def defect_count(self) -> int:
        return len(self.broken_behavior_refs) + len(self.missing_knowledge_links) + len(self.orphan_nodes)

    def to_dict(self) -> dict:
        return {
            "broken_behavior_refs": [list(p) for p in self.broken_behavior_refs],
            "missing_knowledge_links": [list(p) for p in self.missing_knowledge_links],
            "orphan_nodes": list(self.orphan_nodes),
            "traversable": self.traversable,
            "defect_count": self.defect_count,
        }


@dataclass(frozen=True)
class SubgraphHit:
    node: KnowledgeNode
    match_count: int
    edges: tuple[KnowledgeEdge, ...]


def _require(doc: dict, key: str, context: str) -> Any:
    if key not in doc:
        raise BundleParseError(f"{context}: missing field {key!r}")
    return doc[key]


def _valid_id(value: Any, context: str) -> str:
    if not isinstance(value, str) or not ID_PATTERN.match(value):
        raise BundleParseError(f"{context}: invalid id {value!r} (must match [a-z0-9-]+)")
    return value


def _parse_behavior(doc: dict) -> Behavior:
    bid = _valid_id(_require(doc, "id", "behavior"), "behavior")
    try:
        enforcement = Enforcement(_require(doc, "enforcement", f"behavior {bid}"))
    except ValueError as exc:
        raise BundleParseError(f"behavior {bid}: unknown enforcement {doc['enforcement']!r}") from exc
    version = int(doc.get("version", 1))
    if version < 1:
        raise BundleParseError(f"behavior {bid}: version must be >= 1")
    return Behavior(
        id=bid,
        title=str(doc.get("title", "")),
        constraint_text=str(doc.get("constraint_text", "")),
        enforcement=enforcement,
        applies_to=frozenset(doc.get("applies_to", [])),
        version=version,
    )


def _parse_node(doc: dict) -> KnowledgeNode:
    nid = _valid_id(_require(doc, "id", "knowledge_node"), "knowledge_node")
    try:
        kind = NodeKind(_require(doc, "kind", f"knowledge_node {nid}"))
    except ValueError as exc:
        raise BundleParseError(f"knowledge_node {nid}: unknown kind {doc['kind']!r}") from exc
    tags = frozenset(doc.get("retrieval_tags", []))
    if not tags:
        raise BundleParseError(f"knowledge_node {nid}: retrieval_tags must be non-empty")
    return KnowledgeNode(id=nid, kind=kind, attributes=dict(doc.get("attributes", {})), retrieval_tags=tags)


def _parse_edge(doc: dict) -> KnowledgeEdge:
    try:
        relation = EdgeRelation(_require(doc, "relation", "knowledge_edge"))
    except ValueError as exc:
        raise BundleParseError(f"knowledge_edge: unknown relation {doc['relation']!r}") from exc
    return KnowledgeEdge(
        src=str(_require(doc, "from", "knowledge_edge")),
        dst=str(_require(doc, "to", "knowledge_edge")),
        relation=relation,
    )


def _parse_skill(doc: dict) -> Skill:
    sid = _valid_id(_require(doc, "id", "skill"), "skill")
    recipe_docs = _require(doc, "recipe", f"skill {sid}")
    if not recipe_docs:
        raise BundleParseError(f"skill {sid}: recipe must be non-empty")
    recipe = []
    for step in recipe_docs:
        kind = step.get("kind")
        if kind not in ("tool", "skill"):
            raise BundleParseError(f"skill {sid}: recipe step kind must be 'tool' or 'skill'")
        recipe.append(Step(kind=kind, target=str(step.get("target", "")), params=dict(step.get("params", {}))))
    outcomes = tuple(
        ExpectedOutcome(validator=str(o["validator"]), verdict=str(o.get("verdict", "pass")))
        for o in doc.get("expected_outcomes", [])
    )
    return Skill(
        id=sid,
        name=str(doc.get("name", sid)),
        prerequisites=tuple(doc.get("prerequisites", [])),
        behavior_gates=tuple(doc.get("behavior_gates", [])),
        recipe=tuple(recipe),
        expected_outcomes=outcomes,
        required_capabilities=frozenset(doc.get("required_capabilities", [])),
    )


class ArtifactStore:
    """Immutable-after-load store for the three artifact tracks."""

    def __init__(
        self,
        behaviors: dict[str, Behavior],
        nodes: dict[str, KnowledgeNode],
        edges: list[KnowledgeEdge],
        skills: dict[str, Skill],
    ) -> None:
        self.behaviors = behaviors
        self.nodes = nodes
        self.edges = edges
        self.skills = skills
        self._tag_index: dict[str, list[str]] = {}
        for node_id in sorted(nodes):
            for tag in nodes[node_id].retrieval_tags:
                self._tag_index.setdefault(tag, []).append(node_id)
        self._integrity: IntegrityReport | None = None

    def counts(self) -> dict:
        return {
            "behaviors": len(self.behaviors),
            "knowledge_nodes": len(self.nodes),
            "knowledge_edges": len(self.edges),
            "skills": len(self.skills),
        }

    def integrity(self) -> IntegrityReport:
        # Pure over an immutable store, so a single computation is shared.
        if self._integrity is None:
            self._integrity = validate_integrity(self)
        return self._integrity

    def serialize(self) -> list[dict]:
        docs: list[dict] = [self.behaviors[k].to_document() for k in sorted(self.behaviors)]
        docs += [self.nodes[k].to_document() for k in sorted(self.nodes)]
        docs += [e.to_document() for e in self.edges]
        docs += [self.skills[k].to_document() for k in sorted(self.skills)]
        return docs


def _documents_from_source(source: Any) -> list[dict]:
    if isinstance(source, (list, tuple)):
        return [dict(d) for d in source]
    if isinstance(source, dict):
        return [dict(d) for d in source.get("documents", [])]
    path = Path(source)
    if path.is_dir():
        docs: list[dict] = []
        for file in sorted(path.glob("*.json")):
            try:
                loaded = json.loads(file.read_text(encoding="utf-8"))
            except Exception as exc:
                raise BundleParseError(f"{file.name}: {exc}") from exc
            if isinstance(loaded, list):
                docs.extend(loaded)
            else:
                docs.append(loaded)
        return docs
    if path.is_file():
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except Exception as exc:
            raise BundleParseError(f"{path.name}: {exc}") from exc
        if isinstance(loaded, dict):
            loaded = loaded.get("documents", [])
        return list(loaded)
    raise BundleParseError(f"artifact bundle not found: {source}")


def load_store(source: Any) -> ArtifactStore:
    """Load an artifact bundle (path, archive file, or document list).

    Broken cross-references load fine (they are lint findings, not parse
    errors); duplicate ids and malformed documents are rejected here.
    """
    documents = _documents_from_source(source)
    behaviors: dict[str, Behavior] = {}
    nodes: dict[str, KnowledgeNode] = {}
    edges: list[KnowledgeEdge] = []
    skills: dict[str, Skill] = {}
    seen_ids: set[str] = set()

    def claim(artifact_id: str) -> None:
        if artifact_id in seen_ids:
            raise DuplicateIdError(artifact_id)
        seen_ids.add(artifact_id)

    for doc in documents:
        if not isinstance(doc, dict):
            raise BundleParseError(f"artifact document must be an object, got {type(doc).__name__}")
        track = doc.get("track")
        if track == "behavior":
            behavior = _parse_behavior(doc)
            claim(behavior.id)
            behaviors[behavior.id] = behavior
        elif track == "knowledge_node":
            node = _parse_node(doc)
            claim(node.id)
            nodes[node.id] = node
        elif track == "knowledge_edge":
            edges.append(_parse_edge(doc))
        elif track == "skill":
            skill = _parse_skill(doc)
            claim(skill.id)
            skills[skill.id] = skill
        else:
            raise BundleParseError(f"unknown track {track!r}")
    return ArtifactStore(behaviors, nodes, edges, skills)


def validate_integrity(store: ArtifactStore) -> IntegrityReport:
    """Enumerate every broken behavior reference, dangling knowledge link,
    and orphaned node. Pure: two calls on the same store yield equal reports.
    """
    broken_behavior_refs: list[tuple[str, str]] = []
    missing_links: list[tuple[str, str]] = []
    for skill_id in sorted(store.skills):
        skill = store.skills[skill_id]
        for gate in skill.behavior_gates:
            if gate not in store.behaviors:
                broken_behavior_refs.append((skill_id, gate))
        for prereq in skill.prerequisites:
            if prereq not in store.nodes:
                missing_links.append((skill_id, prereq))
    for edge in store.edges:
        if edge.relation is EdgeRelation.SUPPORTS_SKILL:
            if edge.src not in store.nodes or edge.dst not in store.skills:
                missing_links.append((edge.dst, edge.src))

    # A node is orphaned when no path of prerequisite/support/part_of/references
    # links connects it to any skill; connectivity is undirected.
    adjacency: dict[str, set[str]] = {}

    def connect(a: str, b: str) -> None:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    resolvable = set(store.nodes) | set(store.skills)
    for skill_id, skill in store.skills.items():
        for prereq in skill.prerequisites:
            if prereq in store.nodes:
                connect(skill_id, prereq)
    for edge in store.edges:
        if edge.src in resolvable and edge.dst in resolvable:
            connect(edge.src, edge.dst)

    reached: set[str] = set()
    frontier = list(store.skills)
    while frontier:
        current = frontier.pop()
        for neighbor in adjacency.get(current, ()):
            if neighbor not in reached and neighbor not in store.skills:
                reached.add(neighbor)
                frontier.append(neighbor)
    orphan_nodes = tuple(n for n in sorted(store.nodes) if n not in reached)

    return IntegrityReport(
        broken_behavior_refs=tuple(broken_behavior_refs),
        missing_knowledge_links=tuple(missing_links),
        orphan_nodes=orphan_nodes,
    )


def resolve_skill(store: ArtifactStore, skill_id: str) -> ResolvedSkill:
    """Materialize a skill's behavior gates and prerequisites, failing fast
    on the first dangling reference."""
    if skill_id not in store.skills:
        raise UnknownSkillError(skill_id)
    skill = store.skills[skill_id]
    gates = []
    for gate in skill.behavior_gates:
        if gate not in store.behaviors:
            raise DanglingReferenceError(skill_id, "behavior", gate)
        gates.append(store.behaviors[gate])
    prereqs = []
    for prereq in skill.prerequisites:
        if prereq not in store.nodes:
            raise DanglingReferenceError(skill_id, "prerequisite", prereq)
        prereqs.append(store.nodes[prereq])
    return ResolvedSkill(skill=skill, behaviors=tuple(gates), prerequisites=tuple(prereqs))


def retrieve_subgraph(store: ArtifactStore, tags: Iterable[str], limit: int) -> list[SubgraphHit]:
    """Tag-intersection retrieval over the knowledge track.

    Refused outright on non-traversable stores: a graph whose links do not
    resolve cannot be trusted as context.
    """
    if limit < 1:
        raise ValueError("limit must be a positive integer")
    report = store.integrity()
    if not report.traversable:
        raise NonTraversableStoreError(
            f"store is not traversable ({report.defect_count} integrity defects); lint and reload"
        )
    tag_set = set(tags)
    scored: list[tuple[int, str]] = []
    for node_id in sorted(store.nodes):
        count = len(store.nodes[node_id].retrieval_tags & tag_set)
        if count > 0:
            scored.append((-count, node_id))
    scored.sort()
    hits = []
    for neg_count, node_id in scored[:limit]:
        edges = tuple(e for e in store.edges if e.src == node_id or e.dst == node_id)
        hits.append(SubgraphHit(node=store.nodes[node_id], match_count=-neg_count, edges=edges))
    return hits


def write_bundle(documents: Iterable[dict], directory: str | Path) -> Path:
    """Write one JSON document per artifact into a bundle directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, doc in enumerate(documents):
        track = doc.get("track", "artifact")
        name = doc.get("id", f"edge-{i:03d}")
        path = directory / f"{i:03d}_{track}_{name}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def format_report(report: IntegrityReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True)
    lines = [
        f"broken skill->behavior references: {len(report.broken_behavior_refs)}",
    ]
    for skill_id, missing in report.broken_behavior_refs:
        lines.append(f"  {skill_id} -> {missing} (missing behavior)")
    lines.append(f"missing knowledge->skill links: {len(report.missing_knowledge_links)}")
    for skill_id, missing in report.missing_knowledge_links:
        lines.append(f"  {skill_id} <- {missing} (missing knowledge link)")
    lines.append(f"orphaned nodes: {len(report.orphan_nodes)}")
    for node_id in report.orphan_nodes:
        lines.append(f"  {node_id} (unreachable from any skill)")
    lines.append(f"traversable: {'true' if report.traversable else 'false'}")
    lines.append(f"total defects: {report.defect_count}")
    return "\n".join(lines)
