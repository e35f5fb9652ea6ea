"""Ontology parsing, hypergeometric oracle, multiple-testing adjustment."""

import math
from fractions import Fraction

import numpy as np
import pytest

from crosstraj import enrich, synth
from crosstraj.errors import FormatError, ValidationError

OBO = """\
format-version: 1.2

[Term]
id: X:0001
name: root
namespace: biological_process

[Term]
id: X:0002
name: branch a
namespace: biological_process
is_a: X:0001 ! root

[Term]
id: X:0003
name: branch b
namespace: biological_process
is_a: X:0001 ! root

[Term]
id: X:0004
name: leaf
namespace: biological_process
is_a: X:0002 ! branch a
is_a: X:0003 ! branch b

[Term]
id: X:0005
name: dead
is_obsolete: true

[Typedef]
id: part_of
name: part of
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# OBO parsing


def test_load_term_graph(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    assert len(graph) == 4
    assert "X:0005" not in graph  # obsolete dropped
    assert graph.names["X:0004"] == "leaf"
    assert graph.namespaces["X:0002"] == "biological_process"
    assert graph.parents["X:0004"] == ("X:0002", "X:0003")
    assert graph.ancestors("X:0004") == {"X:0001", "X:0002", "X:0003"}
    assert graph.ancestors("X:0001") == frozenset()
    with pytest.raises(ValidationError):
        graph.ancestors("X:9999")


def test_ancestors_brute_force_oracle(tmp_path):
    """Closure matches naive repeated expansion on a random DAG."""
    rng = np.random.default_rng(0)
    n = 40
    lines = ["format-version: 1.2", ""]
    parent_map = {}
    for i in range(n):
        tid = f"R:{i:04d}"
        lines += ["[Term]", f"id: {tid}", f"name: term {i}"]
        parents = [f"R:{j:04d}" for j in range(i) if rng.random() < 0.1]
        parent_map[tid] = parents
        lines += [f"is_a: {p}" for p in parents]
        lines.append("")
    graph = enrich.load_term_graph(_write(tmp_path, "dag.obo", "\n".join(lines)))

    def naive(tid):
        out = set()
        frontier = list(parent_map[tid])
        while frontier:
            t = frontier.pop()
            if t not in out:
                out.add(t)
                frontier.extend(parent_map[t])
        return out

    for tid in parent_map:
        assert graph.ancestors(tid) == naive(tid)


def test_load_term_graph_rejects_dangling(tmp_path):
    text = "[Term]\nid: X:0001\nname: a\nis_a: X:0099\n"
    with pytest.raises(ValidationError, match="unknown term"):
        enrich.load_term_graph(_write(tmp_path, "bad.obo", text))


def test_load_term_graph_rejects_cycle(tmp_path):
    text = (
        "[Term]\nid: X:0001\nname: a\nis_a: X:0002\n\n"
        "[Term]\nid: X:0002\nname: b\nis_a: X:0001\n"
    )
    with pytest.raises(ValidationError, match="cycle"):
        enrich.load_term_graph(_write(tmp_path, "cycle.obo", text))


def test_load_term_graph_obsolete_parent_dropped(tmp_path):
    text = (
        "[Term]\nid: X:0001\nname: a\nis_obsolete: true\n\n"
        "[Term]\nid: X:0002\nname: b\nis_a: X:0001\n"
    )
    graph = enrich.load_term_graph(_write(tmp_path, "obs.obo", text))
    assert graph.parents["X:0002"] == ()


def test_load_term_graph_rejects_empty(tmp_path):
    with pytest.raises(FormatError):
        enrich.load_term_graph(_write(tmp_path, "empty.obo", "format-version: 1.2\n"))


def test_load_term_graph_duplicate_id(tmp_path):
    text = "[Term]\nid: X:0001\nname: a\n\n[Term]\nid: X:0001\nname: b\n"
    with pytest.raises(FormatError, match="duplicate"):
        enrich.load_term_graph(_write(tmp_path, "dup.obo", text))


# ---------------------------------------------------------------------------
# GAF parsing


def _gaf_row(symbol, term, qualifier=""):
    return f"DB\t{symbol}\tname\t{qualifier}\t{term}\tPMID:1\tIEA\t\tP\n"


def test_load_annotations_closure(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    gaf = "!gaf-version: 2.2\n" + _gaf_row("G1", "X:0004") + _gaf_row("G2", "X:0002")
    annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)
    assert annotations["X:0004"] == {"G1"}
    assert annotations["X:0002"] == {"G1", "G2"}  # G1 via closure
    assert annotations["X:0003"] == {"G1"}
    assert annotations["X:0001"] == {"G1", "G2"}


def test_load_annotations_not_qualifier(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    gaf = _gaf_row("G1", "X:0002") + _gaf_row("G2", "X:0002", qualifier="NOT|involved_in")
    annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)
    assert annotations["X:0002"] == {"G1"}


def test_load_annotations_unknown_term_warned(tmp_path, caplog):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    gaf = _gaf_row("G1", "X:0002") + _gaf_row("G2", "X:9999")
    with caplog.at_level("WARNING", logger="crosstraj.enrich"):
        annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)
    assert "X:9999" in caplog.text
    assert "X:9999" not in annotations


def test_load_annotations_errors(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    with pytest.raises(FormatError, match="columns"):
        enrich.load_annotations(_write(tmp_path, "short.gaf", "DB\tG1\tx\n"), graph)
    with pytest.raises(ValidationError, match="no usable"):
        enrich.load_annotations(_write(tmp_path, "none.gaf", _gaf_row("G1", "X:9999")), graph)


# ---------------------------------------------------------------------------
# Hypergeometric tail


def _exact_sf(k, N, K, n):
    """Survival function via exact rational arithmetic."""
    total = Fraction(0)
    for i in range(k, min(K, n) + 1):
        total += Fraction(math.comb(K, i) * math.comb(N - K, n - i), math.comb(N, n))
    return total


def test_hypergeom_worked_example():
    # 4 or more of 5 drawn genes annotated, 10 of 50 annotated overall
    expected = _exact_sf(4, 50, 10, 5)
    assert expected == Fraction(8652, 2118760)
    assert enrich.hypergeom_sf(4, 50, 10, 5) == pytest.approx(float(expected), abs=1e-12)
    assert enrich.hypergeom_sf(4, 50, 10, 5) == pytest.approx(4.08e-3, abs=5e-5)


def test_hypergeom_matches_exact_oracle():
    rng = np.random.default_rng(1)
    for _ in range(150):
        N = int(rng.integers(2, 1000))
        K = int(rng.integers(1, N + 1))
        n = int(rng.integers(1, N + 1))
        k = int(rng.integers(0, min(K, n) + 1))
        got = enrich.hypergeom_sf(k, N, K, n)
        want = float(_exact_sf(k, N, K, n))
        assert got == pytest.approx(want, abs=1e-9), (k, N, K, n)


def test_hypergeom_boundaries():
    assert enrich.hypergeom_sf(0, 50, 10, 5) == 1.0
    # k below the support floor: drawing 45 of 50 leaves at least 5 annotated
    assert enrich.hypergeom_sf(5, 50, 10, 45) == 1.0
    assert enrich.hypergeom_sf(11, 50, 10, 20) == 0.0  # beyond the support
    assert enrich.hypergeom_sf(10, 50, 10, 10) == pytest.approx(
        float(_exact_sf(10, 50, 10, 10)), abs=1e-15
    )


# ---------------------------------------------------------------------------
# Benjamini-Hochberg


def _naive_bh(pvalues):
    m = len(pvalues)
    indexed = sorted(enumerate(pvalues), key=lambda kv: kv[1])
    adjusted = [0.0] * m
    prev = 1.0
    for rank in range(m, 0, -1):
        idx, p = indexed[rank - 1]
        prev = min(prev, p * m / rank)
        adjusted[idx] = min(prev, 1.0)
    return adjusted


def test_bh_adjust_matches_oracle():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pvalues = rng.uniform(size=int(rng.integers(1, 30))).tolist()
        got = enrich.bh_adjust(pvalues)
        want = _naive_bh(pvalues)
        assert got == pytest.approx(want, abs=1e-15)


def test_bh_adjust_properties():
    pvalues = [0.01, 0.04, 0.03, 0.5]
    adjusted = enrich.bh_adjust(pvalues)
    assert all(a >= p for a, p in zip(adjusted, pvalues))
    assert all(0.0 <= a <= 1.0 for a in adjusted)
    # monotone in the sorted order
    order = sorted(range(4), key=lambda i: pvalues[i])
    assert [adjusted[i] for i in order] == sorted(adjusted)
    assert enrich.bh_adjust([]) == []


# ---------------------------------------------------------------------------
# End-to-end enrichment


def test_enrich_significance_and_order(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    background = [f"G{i}" for i in range(40)]
    gaf = "".join(_gaf_row(f"G{i}", "X:0004") for i in range(5))
    gaf += "".join(_gaf_row(f"G{i}", "X:0002") for i in range(20, 30))
    annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)

    results = enrich.enrich(["G0", "G1", "G2", "G3"], background, annotations, graph)
    by_term = {r.term_id: r for r in results}
    # all 4 target genes annotate the leaf and its full ancestry
    leaf = by_term["X:0004"]
    assert leaf.k == 4 and leaf.n == 4 and leaf.N == 40 and leaf.K == 5
    expected_p = float(_exact_sf(4, 40, 5, 4))
    assert leaf.p == pytest.approx(expected_p, abs=1e-12)
    assert leaf.significant == (leaf.p < 0.05)
    assert leaf.genes == ("G0", "G1", "G2", "G3")
    # branch a also carries the X:0002-only genes, diluting enrichment
    assert by_term["X:0002"].K == 15
    # raw p ascending, term id tiebreak
    ps = [(r.p, r.term_id) for r in results]
    assert ps == sorted(ps)
    # adjusted values consistent with the standalone implementation
    assert [r.p_adj for r in results] == pytest.approx(
        enrich.bh_adjust([r.p for r in results])
    )


def test_enrich_significance_flips_at_alpha(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    gaf = "".join(_gaf_row(f"G{i}", "X:0002") for i in range(10))
    annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)
    background = [f"G{i}" for i in range(20)]
    results = enrich.enrich(["G0", "G1"], background, annotations, graph)
    p = results[0].p
    lo = enrich.enrich(["G0", "G1"], background, annotations, graph, alpha=p + 1e-12)
    hi = enrich.enrich(["G0", "G1"], background, annotations, graph, alpha=p)
    assert lo[0].significant and not hi[0].significant  # strict comparison


def test_enrich_validation(tmp_path):
    graph = enrich.load_term_graph(_write(tmp_path, "t.obo", OBO))
    gaf = _gaf_row("G1", "X:0002")
    annotations = enrich.load_annotations(_write(tmp_path, "a.gaf", gaf), graph)
    with pytest.raises(ValidationError):
        enrich.enrich([], ["G1"], annotations, graph)
    with pytest.raises(ValidationError):
        enrich.enrich(["G1"], [], annotations, graph)
    with pytest.raises(ValidationError, match="missing from background"):
        enrich.enrich(["G9"], ["G1"], annotations, graph)


def test_enrich_on_planted_annotations(dataset_dir):
    """The chain program of the first chain should light up for its own types."""
    import json

    graph = enrich.load_term_graph(str(dataset_dir / synth.ONTOLOGY_FILENAME))
    annotations = enrich.load_annotations(str(dataset_dir / synth.ANNOTATIONS_FILENAME), graph)
    info = json.loads((dataset_dir / synth.SYNTH_MANIFEST).read_text())
    signatures = info["signatures"]
    lineage = info["lineage"]
    roots = [t for t in signatures if t not in lineage]
    chain_types = [roots[0]]
    while chain_types[-1] in set(lineage.values()):
        child = next(c for c, p in lineage.items() if p == chain_types[-1])
        chain_types.append(child)
    target = sorted({g for t in chain_types for g in signatures[t]})
    background = sorted({g for genes in signatures.values() for g in genes})
    results = enrich.enrich(target, background, annotations, graph)
    top = results[0]
    assert top.significant
    assert set(top.genes) <= set(target)
