"""Shared fixtures: one small planted dataset reused across the suite.

The dataset is generated once per session (60 cells per population keeps the
unit tests fast); tests that need the full-size default regenerate their own.
"""

import pytest

from crosstraj import artifacts, ingest, synth


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("planted")
    synth.synthesize(root, synth.SynthConfig(seed=0, cells_per_population=60))
    return root


@pytest.fixture(scope="session")
def raw_samples(dataset_dir):
    return ingest.load_dataset(dataset_dir)


@pytest.fixture(scope="session")
def samples(raw_samples):
    return ingest.normalize_expression(raw_samples)


@pytest.fixture(scope="session")
def nodes(samples):
    return ingest.build_population_nodes(samples, ingest.GeneEmbeddingTable())


@pytest.fixture(scope="session")
def payload_dict(samples, nodes):
    return artifacts.build_graph_payload(samples, nodes)


@pytest.fixture(scope="session")
def truth_edges(dataset_dir):
    return synth.load_edge_labels(dataset_dir / synth.TRUTH_FILENAME)
