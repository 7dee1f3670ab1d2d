import json

import pytest

from relforge.catalog import get_property
from relforge.dataset_io import (
    DatasetParseError,
    IntegrityError,
    LabelVerificationError,
    SplitGapError,
    data_path,
    make_splits,
    manifest_path_for,
    parse_records,
    read_dataset,
    validation_count,
    write_dataset,
    write_splits,
)
from relforge.generator import GenInfo, GenJob, LabeledSet, generate
from relforge.graph import DirectedGraph

REFL = get_property("reflexivity")


def tiny_set():
    pos = DirectedGraph.from_edges(2, [(0, 0), (1, 1)])
    neg = DirectedGraph.from_edges(2, [(0, 0)])
    return LabeledSet(2, [pos], [neg], [0])


def tiny_job(family="perturb", size=2):
    return GenJob(REFL, size, family, 7)


def test_two_record_file(tmp_path):
    path = tmp_path / "v2.tsv"
    man = write_dataset(tiny_set(), path, tiny_job(), GenInfo())
    assert path.read_text() == "1\t2\t1001\n0\t2\t1000\t0\n"
    assert man["counts"] == {"positives": 1, "negatives": 1}
    on_disk = json.loads(manifest_path_for(path).read_text())
    assert on_disk == man
    assert list(on_disk)[:3] == ["format", "dataset", "property"]


def test_round_trip(tmp_path):
    ls, info = generate(GenJob(REFL, 4, "perturb", 3))
    path = tmp_path / "v4.tsv"
    write_dataset(ls, path, GenJob(REFL, 4, "perturb", 3), info)
    back, man = read_dataset(path, verify=REFL)
    assert back == ls
    assert man["sha256"] and man["exhaustive"] is True
    # the manifest path works too
    assert read_dataset(manifest_path_for(path))[0] == ls


def test_refuses_overwrite(tmp_path):
    path = tmp_path / "v2.tsv"
    write_dataset(tiny_set(), path, tiny_job(), GenInfo())
    with pytest.raises(FileExistsError):
        write_dataset(tiny_set(), path, tiny_job(), GenInfo())
    write_dataset(tiny_set(), path, tiny_job(), GenInfo(), force=True)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_checksum_mismatch(tmp_path):
    path = tmp_path / "v2.tsv"
    write_dataset(tiny_set(), path, tiny_job(), GenInfo())
    path.write_text("1\t2\t1001\n0\t2\t0000\t0\n")
    with pytest.raises(IntegrityError):
        read_dataset(path)


def test_missing_manifest(tmp_path):
    path = tmp_path / "v2.tsv"
    path.write_text("1\t2\t1001\n")
    with pytest.raises(IntegrityError):
        read_dataset(path)


def test_verify_against_wrong_property(tmp_path):
    path = tmp_path / "v2.tsv"
    write_dataset(tiny_set(), path, tiny_job(), GenInfo())
    with pytest.raises(LabelVerificationError) as err:
        read_dataset(path, verify=get_property("irreflexivity"))
    assert err.value.line == 1


def test_parse_single_record():
    ls = parse_records("1\t2\t0100\n")
    assert ls.positives == [DirectedGraph.from_edges(2, [(0, 1)])]
    assert ls.negatives == [] and ls.pairs is None


@pytest.mark.parametrize("text, line", [
    ("2\t2\t0100\n", 1),
    ("1\t2\t010\n", 1),
    ("1\t2\t0100\n1\t3\t000000000\n", 2),
    ("0\t2\t0100\n1\t2\t1111\n", 2),
    ("1\t2\t0100\n0\t2\t0000\t5\n", 2),
    ("1\t2\t0100\n0\t2\t0000\t0\n0\t2\t0001\n", 3),
    ("1\t2\t0100\t0\n", 1),
    ("1 2 0100\n", 1),
    ("1\tx\t0100\n", 1),
])
def test_parse_errors(text, line):
    with pytest.raises(DatasetParseError) as err:
        parse_records(text)
    assert err.value.line == line


def build_family(root, family="random", sizes=None):
    base = REFL.base_size
    for size in sizes if sizes is not None else range(base, base + 11):
        job = GenJob(REFL, size, family, 1, target_positives=20)
        ls, info = generate(job)
        write_dataset(ls, data_path(root, REFL.name, family, size), job, info)


def test_splits(tmp_path):
    build_family(tmp_path)
    train, test = make_splits(REFL, "random", tmp_path, seed=4)
    assert train.category == "GraphRandom-Train"
    assert train.members == ["reflexivity/random/v5"]
    assert test.category == "GraphRandom-Test"
    assert test.members == [f"reflexivity/random/v{s}" for s in range(6, 16)]
    rows = train.rows["reflexivity/random/v5"]
    held = train.validation["reflexivity/random/v5"]
    assert len(held) == validation_count(rows) and len(set(held)) == len(held)
    assert abs(len(held) - 0.05 * rows) <= 0.5
    again, _ = make_splits(REFL, "random", tmp_path, seed=4)
    assert again.validation == train.validation
    paths = write_splits([train, test], REFL.name, "random", tmp_path)
    doc = json.loads(paths[0].read_text())
    part = doc["partition"]["reflexivity/random/v5"]
    assert part["train"] + part["validation"] == rows


def test_split_gap(tmp_path):
    build_family(tmp_path, sizes=[s for s in range(5, 16) if s != 9])
    with pytest.raises(SplitGapError) as err:
        make_splits(REFL, "random", tmp_path)
    assert err.value.missing == [9]
    assert "9" in str(err.value)


@pytest.mark.parametrize("rows, held", [(0, 0), (1, 0), (10, 1), (19, 1), (20, 1), (30, 2), (10000, 500)])
def test_validation_count(rows, held):
    assert validation_count(rows) == held
