import numpy as np
import pytest

from backend.app.core.exceptions import (
    BadConfig,
    DataIoError,
    EmptyPartition,
    ParseError,
)
from backend.app.models.specs import ObjectiveSpec
from backend.app.repositories import (
    CsvFederationRepository,
    QuadraticFederationRepository,
    SyntheticFederationRepository,
    load_csv_federation,
    make_quadratic_federation,
    make_synthetic_federation,
    repository_for,
)
from backend.app.schemas.config import (
    CsvFederationSpec,
    QuadraticFederationSpec,
    SyntheticFederationSpec,
)

# =============================================================================
# 합성 데이터
# =============================================================================


def test_one_class_per_client_shards():
    fed = make_synthetic_federation(n_clients=10, dim=2, samples_per_client=30, seed=0)
    assert fed.n_clients == 10
    for i in range(10):
        labels = fed.shard(i).labels
        assert labels.shape == (30,)
        assert np.unique(labels).tolist() == [float(i % 2)]


def test_multiclass_labels_cycle_over_heads():
    objective = ObjectiveSpec(kind="logistic_regression", n_classes=3)
    fed = make_synthetic_federation(
        n_clients=5, dim=2, samples_per_client=4, seed=1, objective=objective
    )
    first_labels = [float(fed.shard(i).labels[0]) for i in range(5)]
    assert first_labels == [0.0, 1.0, 2.0, 0.0, 1.0]


def test_synthetic_is_deterministic():
    a = make_synthetic_federation(n_clients=3, dim=4, samples_per_client=12, seed=5)
    b = make_synthetic_federation(n_clients=3, dim=4, samples_per_client=12, seed=5)
    c = make_synthetic_federation(n_clients=3, dim=4, samples_per_client=12, seed=6)
    for i in range(3):
        np.testing.assert_array_equal(a.shard(i).features, b.shard(i).features)
    assert not np.array_equal(a.shard(0).features, c.shard(0).features)


def test_unbalanced_sizes_and_holdout():
    fed = make_synthetic_federation(
        n_clients=3, dim=2, samples_per_client=[2, 5, 9], seed=0, holdout_per_client=4
    )
    assert [fed.shard(i).n_samples for i in range(3)] == [2, 5, 9]
    holdout = fed.holdout_federation()
    assert [holdout.shard(i).n_samples for i in range(3)] == [4, 4, 4]
    assert not np.array_equal(holdout.shard(0).features, fed.shard(0).features[:2])


def test_mixed_heterogeneity_blends_labels():
    fed = make_synthetic_federation(
        n_clients=4,
        dim=2,
        samples_per_client=400,
        heterogeneity="mixed",
        alpha=1.0,
        seed=2,
    )
    assert len(np.unique(fed.shard(0).labels)) == 2


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_clients": 0, "dim": 2},
        {"n_clients": 2, "dim": 2, "heterogeneity": "iid"},
        {"n_clients": 2, "dim": 2, "heterogeneity": "mixed", "alpha": 1.5},
        {"n_clients": 2, "dim": 2, "samples_per_client": [3]},
    ],
)
def test_synthetic_rejects_bad_arguments(kwargs):
    with pytest.raises(BadConfig):
        make_synthetic_federation(**kwargs)


def test_quadratic_shards_are_centered_exactly():
    fed = make_quadratic_federation(
        [[1.0, -2.0], [0.5, 0.5]], samples_per_client=6, noise=0.7, seed=4
    )
    means = [fed.shard(i).features.mean(axis=0) for i in range(2)]
    np.testing.assert_allclose(means[0], [1.0, -2.0], atol=1e-12)
    np.testing.assert_allclose(means[1], [0.5, 0.5], atol=1e-12)
    assert fed.shard(0).features.std() > 0.0


def test_quadratic_requires_quadratic_objective():
    with pytest.raises(BadConfig):
        make_quadratic_federation(
            [[0.0]], objective=ObjectiveSpec(kind="logistic_regression")
        )


# =============================================================================
# CSV
# =============================================================================


def _csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_csv_by_label(tmp_path):
    path = _csv(tmp_path, "1.0,2.0,1\n3.0,4.0,0\n5.0,6.0,1\n7.0,8.0,0\n")
    fed = load_csv_federation(path)
    assert fed.n_clients == 2
    np.testing.assert_array_equal(fed.shard(0).features, [[3.0, 4.0], [7.0, 8.0]])
    np.testing.assert_array_equal(fed.shard(1).features, [[1.0, 2.0], [5.0, 6.0]])
    assert fed.shard(0).labels.tolist() == [0.0, 0.0]
    assert fed.shard(1).labels.tolist() == [1.0, 1.0]


def test_csv_encodes_labels(tmp_path):
    path = _csv(tmp_path, "0.1,-1\n0.2,1\n0.3,-1\n")
    fed = load_csv_federation(path)
    assert fed.shard(0).labels.tolist() == [0.0, 0.0]
    assert fed.shard(1).labels.tolist() == [1.0]


def test_csv_by_column_with_header_and_splits(tmp_path):
    pairs = [(1, 0), (2, 1), (1, 2), (2, 3), (1, 4), (2, 5)]
    rows = "\n".join(f"{g},{x}.0,{x % 2}" for g, x in pairs)
    path = _csv(tmp_path, "site,x,y\n" + rows + "\n")
    fed = load_csv_federation(
        path, partition="by_column", column=0, header=True, shards_per_group=3
    )
    assert fed.n_clients == 6
    firsts = [fed.shard(i).features[0, 0] for i in range(6)]
    assert firsts == [0.0, 2.0, 4.0, 1.0, 3.0, 5.0]
    assert fed.feature_dim == 1


def test_csv_missing_file(tmp_path):
    with pytest.raises(DataIoError):
        load_csv_federation(tmp_path / "absent.csv")


def test_csv_parse_error_line(tmp_path):
    path = _csv(tmp_path, "1.0,2.0,1\n3.0,4.0,0\n5.0,oops,1\n")
    with pytest.raises(ParseError) as info:
        load_csv_federation(path)
    assert info.value.line == 3


def test_csv_parse_error_line_with_header(tmp_path):
    path = _csv(tmp_path, "a,b,y\n1.0,x,1\n")
    with pytest.raises(ParseError) as info:
        load_csv_federation(path, header=True)
    assert info.value.line == 2


def test_csv_empty_partition(tmp_path):
    path = _csv(tmp_path, "1.0,1\n2.0,0\n3.0,1\n")
    with pytest.raises(EmptyPartition):
        load_csv_federation(path, shards_per_group=2)


def test_csv_too_many_labels(tmp_path):
    path = _csv(tmp_path, "1.0,0\n2.0,1\n3.0,2\n")
    with pytest.raises(BadConfig):
        load_csv_federation(path)


def test_csv_by_column_needs_distinct_column(tmp_path):
    path = _csv(tmp_path, "1.0,2.0,1\n")
    with pytest.raises(BadConfig):
        load_csv_federation(path, partition="by_column", column=2)


# =============================================================================
# repository
# =============================================================================


def test_repository_for_each_source(tmp_path):
    synthetic = repository_for(
        SyntheticFederationSpec(n_clients=2, dim=2, samples_per_client=3)
    )
    quadratic = repository_for(QuadraticFederationSpec(centers=[[0.0]], data_seed=1))
    csv = repository_for(CsvFederationSpec(path=str(_csv(tmp_path, "1.0,0\n2.0,1\n"))))
    assert isinstance(synthetic, SyntheticFederationRepository)
    assert isinstance(quadratic, QuadraticFederationRepository)
    assert isinstance(csv, CsvFederationRepository)
    assert synthetic.seed_dependent
    assert not quadratic.seed_dependent
    assert not csv.seed_dependent
    assert csv.build(seed=0).n_clients == 2


def test_data_seed_pins_federation():
    spec = SyntheticFederationSpec(
        n_clients=2, dim=2, samples_per_client=3, data_seed=9
    )
    repo = repository_for(spec)
    np.testing.assert_array_equal(
        repo.build(0).shard(1).features, repo.build(1).shard(1).features
    )


def test_repository_for_unknown_spec():
    with pytest.raises(BadConfig):
        repository_for(object())
