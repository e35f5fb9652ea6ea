"""Stage-ordered population graph: edge filtering, paths, BFS hierarchy.

Nodes are (sample, cell_type) populations. Instance edges connect individual
populations; merged edges aggregate them at the cell-type level with a count
weight. A trajectory is a chain of instance edges with strictly increasing
stages; a developmental path groups all trajectories sharing one cell-type
sequence, its frequency being the number of member trajectories.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import NotFoundError, ValidationError
from .ingest import PopulationNode, Sample


@dataclass(frozen=True)
class InstanceEdge:
    src: str
    dst: str
    probability: float = 1.0


@dataclass
class MergedEdge:
    src_type: str
    dst_type: str
    weight: int
    instances: List[InstanceEdge]


@dataclass
class TrajectoryInstance:
    steps: List[str]  # node ids, stages strictly increasing
    edges: List[InstanceEdge]


@dataclass
class DevPath:
    type_sequence: List[str]
    frequency: int
    trajectories: List[TrajectoryInstance]

    @property
    def path_id(self) -> str:
        return ">".join(self.type_sequence)


@dataclass
class HierarchyNode:
    cell_type: str
    relation: str  # "root" | "ancestor" | "descendant"
    distance: int
    path_count: int


@dataclass
class HierarchyTree:
    root: str
    nodes: List[HierarchyNode]
    edges: List[MergedEdge]  # surviving the min_freq filter


class GlobalGraph:
    """Edgeless-at-birth graph over population nodes, one subgraph per sample."""

    def __init__(self, nodes: Sequence[PopulationNode]):
        if not nodes:
            raise ValidationError("global graph needs at least one node")
        self.nodes: List[PopulationNode] = list(nodes)
        self.by_id: Dict[str, PopulationNode] = {}
        for node in nodes:
            if node.node_id in self.by_id:
                raise ValidationError(f"duplicate node id {node.node_id!r}")
            self.by_id[node.node_id] = node
        self.subgraphs: Dict[str, List[str]] = {}
        for node in nodes:
            self.subgraphs.setdefault(node.sample_id, []).append(node.node_id)
        self.instance_edges: List[InstanceEdge] = []

    def stage_of(self, node_id: str) -> int:
        return self.by_id[node_id].stage

    def type_of(self, node_id: str) -> str:
        return self.by_id[node_id].cell_type

    @property
    def cell_types(self) -> Set[str]:
        return {n.cell_type for n in self.nodes}


def build_global_graph(nodes: Sequence[PopulationNode]) -> GlobalGraph:
    return GlobalGraph(nodes)


def filter_edges(
    graph: GlobalGraph, raw_edges: Iterable[InstanceEdge]
) -> Tuple[List[InstanceEdge], Dict[str, int]]:
    """Keep edges with type(src) != type(dst) and stage(src) < stage(dst).

    Returns the retained edges plus counts of dropped edges per reason.
    """
    kept = []
    drops = {"same_type": 0, "stage_order": 0}
    for edge in raw_edges:
        if edge.src not in graph.by_id or edge.dst not in graph.by_id:
            raise ValidationError(f"edge {edge.src}->{edge.dst} references unknown node")
        if graph.type_of(edge.src) == graph.type_of(edge.dst):
            drops["same_type"] += 1
            continue
        if graph.stage_of(edge.src) >= graph.stage_of(edge.dst):
            drops["stage_order"] += 1
            continue
        kept.append(edge)
    return kept, drops


def merge_edges(graph: GlobalGraph, filtered: Iterable[InstanceEdge]) -> List[MergedEdge]:
    """One merged edge per (src_type, dst_type); weight = instance count."""
    groups: Dict[Tuple[str, str], List[InstanceEdge]] = {}
    for edge in filtered:
        key = (graph.type_of(edge.src), graph.type_of(edge.dst))
        groups.setdefault(key, []).append(edge)
    merged = [
        MergedEdge(src_type=k[0], dst_type=k[1], weight=len(v), instances=v)
        for k, v in sorted(groups.items())
    ]
    return merged


def graph_density(graph: GlobalGraph) -> float:
    n = len(graph.nodes)
    if n < 2:
        raise ValidationError("density needs at least 2 nodes")
    return len(graph.instance_edges) / (n * (n - 1))


def _adjacency(edges: Iterable[InstanceEdge]) -> Dict[str, List[InstanceEdge]]:
    adj: Dict[str, List[InstanceEdge]] = {}
    for edge in edges:
        adj.setdefault(edge.src, []).append(edge)
    for lst in adj.values():
        lst.sort(key=lambda e: e.dst)
    return adj


def enumerate_instances(graph: GlobalGraph, type_sequence: Sequence[str]) -> List[TrajectoryInstance]:
    """All instance-edge chains matching the cell-type sequence."""
    if len(type_sequence) < 2:
        raise ValidationError("type sequence must have length >= 2")
    known = graph.cell_types
    for t in type_sequence:
        if t not in known:
            raise ValidationError(f"unknown cell type {t!r}")

    adj = _adjacency(graph.instance_edges)
    starts = [n.node_id for n in graph.nodes if n.cell_type == type_sequence[0]]
    results: List[TrajectoryInstance] = []
    seen: Set[Tuple[str, ...]] = set()

    def extend(chain: List[str], edges: List[InstanceEdge]) -> None:
        depth = len(chain)
        if depth == len(type_sequence):
            key = tuple(chain)
            if key not in seen:
                seen.add(key)
                results.append(TrajectoryInstance(steps=list(chain), edges=list(edges)))
            return
        for edge in adj.get(chain[-1], ()):
            if graph.type_of(edge.dst) != type_sequence[depth]:
                continue
            if graph.stage_of(edge.dst) <= graph.stage_of(chain[-1]):
                continue
            chain.append(edge.dst)
            edges.append(edge)
            extend(chain, edges)
            chain.pop()
            edges.pop()

    for start in sorted(starts):
        extend([start], [])
    results.sort(key=lambda t: tuple(t.steps))
    return results


def group_paths(graph: GlobalGraph, max_len: Optional[int] = None) -> List[DevPath]:
    """Group every realized instance chain of length 2..max_len by type sequence.

    max_len defaults to the number of distinct stages, the longest chain a
    strictly stage-increasing trajectory can have.
    """
    stages = {n.stage for n in graph.nodes}
    if max_len is None:
        max_len = len(stages)
    adj = _adjacency(graph.instance_edges)
    groups: Dict[Tuple[str, ...], List[TrajectoryInstance]] = {}

    def walk(chain: List[str], edges: List[InstanceEdge]) -> None:
        if 2 <= len(chain):
            key = tuple(graph.type_of(n) for n in chain)
            groups.setdefault(key, []).append(
                TrajectoryInstance(steps=list(chain), edges=list(edges))
            )
        if len(chain) >= max_len:
            return
        for edge in adj.get(chain[-1], ()):
            chain.append(edge.dst)
            edges.append(edge)
            walk(chain, edges)
            chain.pop()
            edges.pop()

    for node in sorted(graph.by_id):
        walk([node], [])

    paths = [
        DevPath(type_sequence=list(key), frequency=len(instances), trajectories=instances)
        for key, instances in groups.items()
    ]
    paths.sort(key=lambda p: (-p.frequency, p.type_sequence))
    return paths


def top_frequency_paths(paths: Sequence[DevPath], fraction: float = 0.15) -> List[DevPath]:
    """Keep the ceil(fraction * n) most frequent paths, ties at the cut included."""
    if not 0.0 < fraction <= 1.0:
        raise ValidationError("fraction must be in (0, 1]")
    if not paths:
        return []
    ordered = sorted(paths, key=lambda p: (-p.frequency, p.type_sequence))
    keep = math.ceil(fraction * len(ordered))
    cut_freq = ordered[keep - 1].frequency
    while keep < len(ordered) and ordered[keep].frequency == cut_freq:
        keep += 1
    return ordered[:keep]


def bfs_hierarchy(
    merged_edges: Sequence[MergedEdge],
    core_type: str,
    min_freq: int = 0,
    known_types: Optional[Set[str]] = None,
) -> HierarchyTree:
    """Ancestor/descendant tree around a core type over merged edges.

    Descendants follow edge direction, ancestors go against it; edges below
    min_freq are ignored. A type is visited at most once per relation.
    """
    edges = [e for e in merged_edges if e.weight >= min_freq]
    types_present = {e.src_type for e in edges} | {e.dst_type for e in edges}
    if known_types:
        types_present |= set(known_types)
    if core_type not in types_present:
        raise NotFoundError(f"unknown core type {core_type!r}")

    fwd: Dict[str, List[str]] = {}
    rev: Dict[str, List[str]] = {}
    for e in edges:
        fwd.setdefault(e.src_type, []).append(e.dst_type)
        rev.setdefault(e.dst_type, []).append(e.src_type)

    nodes = [HierarchyNode(core_type, "root", 0, 1)]

    for relation, adj in (("descendant", fwd), ("ancestor", rev)):
        # BFS layering, then count layer-respecting chains from the root
        dist = {core_type: 0}
        counts = {core_type: 1}
        frontier = deque([core_type])
        order: List[str] = []
        while frontier:
            current = frontier.popleft()
            for nxt in sorted(set(adj.get(current, ()))):
                if nxt == core_type:
                    continue
                if nxt not in dist:
                    dist[nxt] = dist[current] + 1
                    counts[nxt] = 0
                    frontier.append(nxt)
                    order.append(nxt)
                if dist[nxt] == dist[current] + 1:
                    counts[nxt] += counts[current]
        for t in order:
            nodes.append(HierarchyNode(t, relation, dist[t], counts[t]))

    nodes.sort(key=lambda n: (n.relation != "root", n.relation, n.distance, -n.path_count, n.cell_type))
    return HierarchyTree(root=core_type, nodes=nodes, edges=edges)


def validate_path_selection(
    merged_edges: Sequence[MergedEdge], selected_types: Sequence[str]
) -> Tuple[bool, Optional[Tuple[str, str]]]:
    """True iff every consecutive pair has a directed merged edge.

    Sequences are given in developmental order (earlier type first). Returns
    the first broken pair when invalid.
    """
    if len(selected_types) < 2:
        raise ValidationError("selection needs at least 2 types")
    present = {(e.src_type, e.dst_type) for e in merged_edges}
    for src, dst in zip(selected_types, selected_types[1:]):
        if (src, dst) not in present:
            return False, (src, dst)
    return True, None


def cell_counts_by_stage(samples: Sequence[Sample]) -> Dict[str, object]:
    """Per cell type, mean cells per sample at each stage ordinal (0 if absent)."""
    stages = sorted({s.stage for s in samples})
    samples_per_stage = {st: sum(1 for s in samples if s.stage == st) for st in stages}
    totals: Dict[str, Dict[int, int]] = {}
    for sample in samples:
        for cell in sample.cells:
            totals.setdefault(cell.cell_type, {}).setdefault(sample.stage, 0)
            totals[cell.cell_type][sample.stage] += 1
    series = {
        cell_type: [totals[cell_type].get(st, 0) / samples_per_stage[st] for st in stages]
        for cell_type in sorted(totals)
    }
    return {"stages": stages, "series": series}
