"""Dataset files, manifests and train/test split categories.

A dataset is a tab-separated text file, one graph per line::

    <label>\t<n>\t<bits>[\t<pair_ref>]

positives first (label 1), then negatives (label 0). ``pair_ref`` is the
0-based line index of the positive a perturbed negative was derived from.
Next to it sits ``<stem>.manifest.json`` with a fixed key order and the
SHA-256 of the data file.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import random
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from . import __version__
from .catalog import PropertyDef
from .dsl import pretty
from .evaluator import compile_checker
from .generator import GenInfo, GenJob, LabeledSet, dataset_id
from .graph import DirectedGraph, GraphError, decode_bitstring, mask_to_bitstring
from .seeds import derive_seed

FORMAT = "relforge-dataset/1"
DATA_SUFFIX = ".tsv"
MANIFEST_SUFFIX = ".manifest.json"
VALIDATION_FRACTION_DENOM = 20  # 5%
SPAN = 10  # test sizes per property: base+1 .. base+10
FILE_MODE = 0o644

CATEGORY_NAMES = {"random": "GraphRandom", "perturb": "GraphPerturb"}


class DatasetError(Exception):
    pass


class DatasetParseError(DatasetError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class IntegrityError(DatasetError):
    pass


class LabelVerificationError(DatasetError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class SplitGapError(DatasetError):
    def __init__(self, dataset: str, missing: list[int]) -> None:
        super().__init__(f"{dataset}: missing sizes {', '.join(map(str, missing))}")
        self.missing = missing


# --- paths -------------------------------------------------------------------


def data_path(root: str | os.PathLike, prop: str, family: str, size: int) -> Path:
    return Path(root) / prop / family / f"v{size}{DATA_SUFFIX}"


def manifest_path_for(data: str | os.PathLike) -> Path:
    p = Path(data)
    return p.with_name(p.name.removesuffix(DATA_SUFFIX) + MANIFEST_SUFFIX)


def _data_path_from(path: str | os.PathLike) -> Path:
    p = Path(path)
    if p.name.endswith(MANIFEST_SUFFIX):
        return p.with_name(p.name.removesuffix(MANIFEST_SUFFIX) + DATA_SUFFIX)
    return p


# --- serialization -----------------------------------------------------------


def format_records(ls: LabeledSet) -> str:
    n = ls.n
    lines = [f"1\t{n}\t{mask_to_bitstring(g.mask, n)}" for g in ls.positives]
    if ls.pairs is None:
        lines.extend(f"0\t{n}\t{mask_to_bitstring(g.mask, n)}" for g in ls.negatives)
    else:
        lines.extend(f"0\t{n}\t{mask_to_bitstring(g.mask, n)}\t{p}"
                     for g, p in zip(ls.negatives, ls.pairs))
    return "".join(line + "\n" for line in lines)


def parse_records(text: str) -> LabeledSet:
    positives: list[DirectedGraph] = []
    negatives: list[DirectedGraph] = []
    pairs: list[int] = []
    paired: bool | None = None
    size: int | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        fields = raw.split("\t")
        if len(fields) not in (3, 4):
            raise DatasetParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", lineno)
        label, n_text, bits = fields[:3]
        if label not in ("0", "1"):
            raise DatasetParseError(f"label must be 0 or 1, got {label!r}", lineno)
        if not n_text.isdigit():
            raise DatasetParseError(f"bad node count {n_text!r}", lineno)
        n = int(n_text)
        if size is None:
            size = n
        elif n != size:
            raise DatasetParseError(f"node count {n} differs from earlier lines ({size})", lineno)
        try:
            g = decode_bitstring(n, bits)
        except GraphError as exc:
            raise DatasetParseError(str(exc), lineno) from None
        if label == "1":
            if negatives:
                raise DatasetParseError("positive record after negatives", lineno)
            if len(fields) == 4:
                raise DatasetParseError("pair_ref is only allowed on negatives", lineno)
            positives.append(g)
            continue
        has_ref = len(fields) == 4
        if paired is None:
            paired = has_ref
        elif paired != has_ref:
            raise DatasetParseError("pair_ref present on some negatives but not others", lineno)
        if has_ref:
            ref = fields[3]
            if not ref.isdigit() or int(ref) >= len(positives):
                raise DatasetParseError(f"pair_ref {ref!r} does not name a positive line", lineno)
            pairs.append(int(ref))
        negatives.append(g)
    if size is None:
        raise DatasetParseError("empty dataset", 0)
    return LabeledSet(size, positives, negatives, pairs if paired else None)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_manifest(ls: LabeledSet, job: GenJob, info: GenInfo, checksum: str) -> dict:
    """Manifest fields in their normative order."""
    prop = job.prop
    return {
        "format": FORMAT,
        "dataset": job.dataset_id,
        "property": prop.name,
        "formula": pretty(prop.formula),
        "category": prop.category,
        "family": job.family,
        "size": job.size,
        "base_size": prop.base_size,
        "counts": {"positives": len(ls.positives), "negatives": len(ls.negatives)},
        "seed": job.seed,
        "sampler": info.sampler,
        "symmetry_breaking": info.symmetry_breaking,
        "exhaustive": info.exhaustive,
        "caps": {
            "target_positives": job.target_positives,
            "enumeration": job.enum_cap,
            "attempts_per_flip_count": job.attempt_cap,
            "max_fbits": job.max_fbits,
            "rejection_stall": job.stall_limit,
            "conflicts": job.conflict_budget,
        },
        "negative_fallback": info.negative_fallback,
        "unpaired": info.unpaired,
        "flip_distances": {str(k): v for k, v in info.flip_distance_histogram.items()},
        "sha256": checksum,
        "tool_version": __version__,
    }


def dump_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2) + "\n"


@contextmanager
def _dir_lock(directory: Path) -> Iterator[None]:
    fd = os.open(directory, os.O_RDONLY)
    try:
        fcntl.flock(fd, fcntl.LOCK_EX)
        yield
    finally:
        fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


def _atomic_write(path: Path, data: bytes, force: bool) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            os.fchmod(fh.fileno(), FILE_MODE)
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        if force:
            os.replace(tmp, path)
        else:
            os.link(tmp, path)  # fails if the target appeared meanwhile
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_dataset(ls: LabeledSet, path: str | os.PathLike, job: GenJob, info: GenInfo,
                  force: bool = False) -> dict:
    """Write the data file and its manifest; returns the manifest."""
    data = Path(path)
    man = manifest_path_for(data)
    data.parent.mkdir(parents=True, exist_ok=True)
    payload = format_records(ls).encode("ascii")
    manifest = build_manifest(ls, job, info, sha256_hex(payload))
    with _dir_lock(data.parent):
        if not force:
            for p in (data, man):
                if p.exists():
                    raise FileExistsError(f"{p} exists (pass force to overwrite)")
        _atomic_write(data, payload, force)
        _atomic_write(man, dump_manifest(manifest).encode("utf-8"), force)
    return manifest


def read_manifest(path: str | os.PathLike) -> dict:
    man = manifest_path_for(_data_path_from(path))
    try:
        return json.loads(man.read_text("utf-8"))
    except FileNotFoundError:
        raise IntegrityError(f"manifest {man} not found") from None
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"manifest {man} is not valid JSON: {exc}") from None


def read_dataset(path: str | os.PathLike,
                 verify: PropertyDef | None = None) -> tuple[LabeledSet, dict]:
    """Parse a dataset (data file or manifest path) and check it against its manifest.

    With ``verify`` every label is re-evaluated against that property.
    """
    data = _data_path_from(path)
    manifest = read_manifest(data)
    payload = data.read_bytes()
    digest = sha256_hex(payload)
    if digest != manifest.get("sha256"):
        raise IntegrityError(f"{data}: checksum {digest} does not match manifest {manifest.get('sha256')}")
    try:
        text = payload.decode("ascii")
    except UnicodeDecodeError:
        raise IntegrityError(f"{data}: non-ASCII content") from None
    ls = parse_records(text)
    counts = manifest.get("counts", {})
    if (counts.get("positives"), counts.get("negatives")) != (len(ls.positives), len(ls.negatives)):
        raise IntegrityError(
            f"{data}: manifest counts {counts} do not match file "
            f"({len(ls.positives)} positives, {len(ls.negatives)} negatives)")
    if manifest.get("size") != ls.n:
        raise IntegrityError(f"{data}: manifest size {manifest.get('size')} but records have n={ls.n}")
    if verify is not None:
        verify_labels(ls, verify)
    return ls, manifest


def verify_labels(ls: LabeledSet, prop: PropertyDef) -> None:
    pred = compile_checker(prop.formula)
    for k, g in enumerate(ls.positives):
        if not pred(g.mask, g.n):
            raise LabelVerificationError(f"labelled 1 but violates {prop.name}", k + 1)
    off = len(ls.positives)
    for k, g in enumerate(ls.negatives):
        if pred(g.mask, g.n):
            raise LabelVerificationError(f"labelled 0 but satisfies {prop.name}", off + k + 1)


# --- splits ------------------------------------------------------------------


@dataclass
class SplitSpec:
    category: str
    members: list[str]
    # for train categories: row indices (into the data file) held out for validation
    validation: dict[str, list[int]] = field(default_factory=dict)
    rows: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"category": self.category, "members": self.members}
        if self.rows:
            out["partition"] = {
                ds: {
                    "rows": self.rows[ds],
                    "train": self.rows[ds] - len(self.validation[ds]),
                    "validation": len(self.validation[ds]),
                    "validation_rows": self.validation[ds],
                }
                for ds in self.members
            }
        return out


def validation_count(rows: int) -> int:
    """5% of ``rows``, rounded half up."""
    return (rows + VALIDATION_FRACTION_DENOM // 2) // VALIDATION_FRACTION_DENOM


def partition_rows(rows: int, seed: int) -> list[int]:
    """Sorted row indices of a seeded 5% validation hold-out."""
    return sorted(random.Random(seed).sample(range(rows), validation_count(rows)))


def make_splits(prop: PropertyDef, family: str, root: str | os.PathLike,
                seed: int = 0) -> list[SplitSpec]:
    """Train (base size) and Test (base+1 .. base+10) categories for one family."""
    if family not in CATEGORY_NAMES:
        raise ValueError(f"unknown family {family!r}")
    base = prop.base_size
    sizes = range(base, base + SPAN + 1)
    missing = [s for s in sizes if not data_path(root, prop.name, family, s).exists()
               or not manifest_path_for(data_path(root, prop.name, family, s)).exists()]
    if missing:
        raise SplitGapError(f"{prop.name}/{family}", missing)
    label = CATEGORY_NAMES[family]
    train_id = dataset_id(prop.name, family, base)
    man = read_manifest(data_path(root, prop.name, family, base))
    rows = man["counts"]["positives"] + man["counts"]["negatives"]
    train = SplitSpec(f"{label}-Train", [train_id],
                      validation={train_id: partition_rows(rows, derive_seed(seed, "split", train_id))},
                      rows={train_id: rows})
    test = SplitSpec(f"{label}-Test", [dataset_id(prop.name, family, s) for s in sizes[1:]])
    return [train, test]


def write_splits(specs: list[SplitSpec], prop: str, family: str, root: str | os.PathLike,
                 force: bool = False) -> list[Path]:
    out_dir = Path(root) / prop / family / "splits"
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with _dir_lock(out_dir):
        for spec in specs:
            p = out_dir / f"{spec.category}.json"
            if p.exists() and not force:
                raise FileExistsError(f"{p} exists (pass force to overwrite)")
            _atomic_write(p, (json.dumps(spec.to_json(), indent=2) + "\n").encode("utf-8"), force)
            paths.append(p)
    return paths
