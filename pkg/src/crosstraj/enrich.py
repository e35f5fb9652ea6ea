"""Gene function enrichment over a term hierarchy.

Terms come from an OBO subset (id / name / namespace / is_a), annotations
from GAF rows. Annotations propagate upward through is_a so a gene annotated
to a child counts for every ancestor. Over-representation of each term in a
target set against a background set is scored with the one-sided
hypergeometric upper tail, with Benjamini-Hochberg adjusted values reported
alongside the raw ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Sequence, Set, Tuple

from .errors import FormatError, ValidationError

logger = logging.getLogger(__name__)

ALPHA = 0.05


@dataclass
class TermGraph:
    names: Dict[str, str]
    namespaces: Dict[str, str]
    parents: Dict[str, Tuple[str, ...]]
    _ancestors: Dict[str, FrozenSet[str]] = field(default_factory=dict, repr=False)

    def __contains__(self, term_id: str) -> bool:
        return term_id in self.names

    def __len__(self) -> int:
        return len(self.names)

    def ancestors(self, term_id: str) -> FrozenSet[str]:
        """All is_a ancestors of a term, excluding the term itself."""
        if term_id not in self.names:
            raise ValidationError(f"unknown term {term_id!r}")
        cached = self._ancestors.get(term_id)
        if cached is not None:
            return cached
        out: Set[str] = set()
        stack = list(self.parents.get(term_id, ()))
        while stack:
            t = stack.pop()
            if t in out:
                continue
            out.add(t)
            stack.extend(self.parents.get(t, ()))
        result = frozenset(out)
        self._ancestors[term_id] = result
        return result


@dataclass
class TermResult:
    term_id: str
    name: str
    namespace: str
    k: int  # annotated genes in target
    K: int  # annotated genes in background
    n: int  # target size
    N: int  # background size
    p: float
    p_adj: float
    significant: bool
    genes: Tuple[str, ...]


def load_term_graph(path: str) -> TermGraph:
    """Parse an OBO file into a term graph.

    Obsolete terms are dropped. An is_a pointing at a term absent from the
    file, or any is_a cycle, is rejected.
    """
    names: Dict[str, str] = {}
    namespaces: Dict[str, str] = {}
    parents: Dict[str, List[str]] = {}
    obsolete: Set[str] = set()

    current: Dict[str, List[str]] = {}
    in_term = False

    def flush() -> None:
        if not current:
            return
        term_ids = current.get("id", [])
        if len(term_ids) != 1:
            raise FormatError("term stanza must have exactly one id")
        tid = term_ids[0]
        if current.get("is_obsolete", ["false"])[0].lower() == "true":
            obsolete.add(tid)
            return
        if tid in names:
            raise FormatError(f"duplicate term id {tid!r}")
        names[tid] = current.get("name", [""])[0]
        namespaces[tid] = current.get("namespace", [""])[0]
        parents[tid] = current.get("is_a", [])

    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("[") and line.endswith("]"):
                if in_term:
                    flush()
                    current = {}
                in_term = line == "[Term]"
                continue
            if not in_term or not line or line.startswith("!"):
                continue
            if ":" not in line:
                raise FormatError(f"malformed OBO line: {line!r}")
            key, _, value = line.partition(":")
            value = value.strip()
            if key == "is_a":
                value = value.split("!", 1)[0].strip()
            current.setdefault(key.strip(), []).append(value)
    if in_term:
        flush()

    if not names:
        raise FormatError(f"no terms found in {path}")

    clean_parents: Dict[str, Tuple[str, ...]] = {}
    for tid, plist in parents.items():
        kept = []
        for pid in plist:
            if pid in obsolete:
                continue
            if pid not in names:
                raise ValidationError(f"term {tid} has is_a to unknown term {pid!r}")
            kept.append(pid)
        clean_parents[tid] = tuple(dict.fromkeys(kept))

    _reject_cycles(clean_parents)
    return TermGraph(names=names, namespaces=namespaces, parents=clean_parents)


def _reject_cycles(parents: Dict[str, Tuple[str, ...]]) -> None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {t: WHITE for t in parents}
    for root in parents:
        if color[root] != WHITE:
            continue
        stack: List[Tuple[str, int]] = [(root, 0)]
        color[root] = GRAY
        while stack:
            node, idx = stack[-1]
            plist = parents.get(node, ())
            if idx < len(plist):
                stack[-1] = (node, idx + 1)
                nxt = plist[idx]
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    raise ValidationError(f"is_a cycle involving {nxt!r}")
                if c == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()


def load_annotations(path: str, graph: TermGraph) -> Dict[str, Set[str]]:
    """GAF rows -> term_id -> set of gene symbols, with upward is_a closure.

    Rows referencing terms absent from the graph are skipped with a warning.
    Qualifiers containing NOT are skipped silently.
    """
    direct: Dict[str, Set[str]] = {}
    unknown: Set[str] = set()
    n_rows = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.startswith("!"):
                continue
            cols = raw.rstrip("\n").split("\t")
            if len(cols) < 5:
                raise FormatError(f"annotation line {lineno}: expected >= 5 columns")
            symbol = cols[1].strip()
            qualifier = cols[3].strip()
            term_id = cols[4].strip()
            if not symbol or not term_id:
                raise FormatError(f"annotation line {lineno}: empty gene or term")
            if "NOT" in qualifier.split("|"):
                continue
            if term_id not in graph:
                unknown.add(term_id)
                continue
            direct.setdefault(term_id, set()).add(symbol)
            n_rows += 1
    if unknown:
        logger.warning(
            "skipped annotations to %d unknown term(s): %s",
            len(unknown),
            ", ".join(sorted(unknown)[:5]),
        )
    if not direct:
        raise ValidationError(f"no usable annotations in {path}")

    closed: Dict[str, Set[str]] = {}
    for term_id, genes in direct.items():
        closed.setdefault(term_id, set()).update(genes)
        for anc in graph.ancestors(term_id):
            closed.setdefault(anc, set()).update(genes)
    logger.info("loaded %d annotation rows over %d closed terms", n_rows, len(closed))
    return closed


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def hypergeom_sf(k: int, N: int, K: int, n: int) -> float:
    """P[X >= k] for X ~ Hypergeometric(N, K, n)."""
    if k <= max(0, n + K - N):
        return 1.0
    hi = min(K, n)
    if k > hi:
        return 0.0
    denom = _log_comb(N, n)
    total = 0.0
    for i in range(k, hi + 1):
        total += math.exp(_log_comb(K, i) + _log_comb(N - K, n - i) - denom)
    return min(total, 1.0)


def bh_adjust(pvalues: Sequence[float]) -> List[float]:
    """Benjamini-Hochberg step-up adjusted values, preserving input order."""
    m = len(pvalues)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: pvalues[i])
    adjusted = [0.0] * m
    running = 1.0
    for rank_idx in range(m - 1, -1, -1):
        i = order[rank_idx]
        value = pvalues[i] * m / (rank_idx + 1)
        running = min(running, value)
        adjusted[i] = min(running, 1.0)
    return adjusted


def enrich(
    target_genes: Iterable[str],
    background_genes: Iterable[str],
    annotations: Dict[str, Set[str]],
    graph: TermGraph,
    alpha: float = ALPHA,
) -> List[TermResult]:
    """Over-representation of closed terms in the target set vs the background.

    Only terms hitting at least one target gene are tested. Results sort by
    ascending raw p, then term id; the significance flag compares the raw p
    against alpha.
    """
    target = set(target_genes)
    background = set(background_genes)
    if not target:
        raise ValidationError("target gene set is empty")
    if not background:
        raise ValidationError("background gene set is empty")
    stray = target - background
    if stray:
        raise ValidationError(
            f"{len(stray)} target gene(s) missing from background: "
            + ", ".join(sorted(stray)[:5])
        )

    N = len(background)
    n = len(target)
    results: List[TermResult] = []
    for term_id in sorted(annotations):
        annotated = annotations[term_id] & background
        hits = annotated & target
        k = len(hits)
        if k == 0:
            continue
        K = len(annotated)
        p = hypergeom_sf(k, N, K, n)
        results.append(
            TermResult(
                term_id=term_id,
                name=graph.names.get(term_id, ""),
                namespace=graph.namespaces.get(term_id, ""),
                k=k,
                K=K,
                n=n,
                N=N,
                p=p,
                p_adj=0.0,
                significant=p < alpha,
                genes=tuple(sorted(hits)),
            )
        )

    adjusted = bh_adjust([r.p for r in results])
    for r, adj in zip(results, adjusted):
        r.p_adj = adj
    results.sort(key=lambda r: (r.p, r.term_id))
    return results
