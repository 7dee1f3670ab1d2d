"""Unified and relative scores over externally produced accuracy results."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

ASPECTS = ("generalizability", "sensitivity", "robustness")
# (train family, test family) per aspect
ASPECT_PAIRING = {
    "generalizability": ("random", "random"),
    "sensitivity": ("perturb", "perturb"),
    "robustness": ("random", "perturb"),
}
DEFAULT_SIZE_COUNT = 10
RESULT_FIELDS = ("model", "property", "aspect", "gsize", "accuracy")
DECIMALS = 3

Number = Union[float, Fraction]


class MetricsError(ValueError):
    pass


class IncompleteGridError(MetricsError):
    def __init__(self, missing: list[tuple[str, str, str]]) -> None:
        shown = "; ".join(f"({a}, {p}, {i})" for a, p, i in missing[:20])
        more = f" and {len(missing) - 20} more" if len(missing) > 20 else ""
        super().__init__(f"missing (aspect, property, model) cells: {shown}{more}")
        self.missing = missing


class DegenerateMeanError(MetricsError):
    pass


def _num(x: object, exact: bool) -> Number:
    if exact:
        return x if isinstance(x, Fraction) else Fraction(x)  # type: ignore[arg-type]
    return float(x)  # type: ignore[arg-type]


def u_score(points: Iterable[tuple[int, Number]], count: int | None = DEFAULT_SIZE_COUNT,
            exact: bool = False) -> Number:
    """Size-weighted mean accuracy: sum(acc * size) / sum(size).

    Points may come in any order but sizes must be distinct positive integers.
    ``count=None`` accepts any non-empty number of points.
    """
    pts = sorted(points, key=lambda p: p[0])
    if count is not None and len(pts) != count:
        raise MetricsError(f"expected {count} (size, accuracy) points, got {len(pts)}")
    if not pts:
        raise MetricsError("no points to score")
    for (a, _), (b, _) in zip(pts, pts[1:]):
        if a == b:
            raise MetricsError(f"graph size {a} appears twice")
    num: Number = _num(0, exact)
    den = 0
    for size, acc in pts:
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            raise MetricsError(f"graph size must be a positive integer, got {size!r}")
        acc = _num(acc, exact)
        if not 0 <= acc <= 1:
            raise MetricsError(f"accuracy {acc} outside [0, 1]")
        num += acc * size
        den += size
    return num / den


@dataclass
class ScoreTable:
    aspects: list[str]
    properties: list[str]
    models: list[str]
    U: dict[tuple[str, str, str], Number]
    R_api: dict[tuple[str, str, str], Number] = field(default_factory=dict)
    R_ai: dict[tuple[str, str], Number] = field(default_factory=dict)
    R_pi: dict[tuple[str, str], Number] = field(default_factory=dict)
    R_i: dict[str, Number] = field(default_factory=dict)

    @property
    def N_G(self) -> int:
        return len(self.models)

    @property
    def N_p(self) -> int:
        return len(self.properties)

    @property
    def N_a(self) -> int:
        return len(self.aspects)

    def mean(self, a: str, p: str) -> Number:
        return sum(self.U[a, p, i] for i in self.models) / self.N_G

    def ranking(self, a: str, p: str) -> list[str]:
        return sorted(self.models, key=lambda i: (-self.R_api[a, p, i], self.models.index(i)))


def _axis(values: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(values))


def relative_scores(U: dict[tuple[str, str, str], Number], aspects: Sequence[str] | None = None,
                    properties: Sequence[str] | None = None,
                    models: Sequence[str] | None = None) -> ScoreTable:
    """Normalise each U by its (aspect, property) mean over models, then average out axes.

    Axes default to the values seen in ``U`` (in first-seen order); every cell
    of their product must be present.
    """
    a_axis = list(aspects) if aspects is not None else _axis(k[0] for k in U)
    p_axis = list(properties) if properties is not None else _axis(k[1] for k in U)
    m_axis = list(models) if models is not None else _axis(k[2] for k in U)
    if not (a_axis and p_axis and m_axis):
        raise MetricsError("empty score grid")
    missing = [(a, p, i) for a in a_axis for p in p_axis for i in m_axis if (a, p, i) not in U]
    if missing:
        raise IncompleteGridError(missing)
    for key in U:
        if key[0] not in a_axis or key[1] not in p_axis or key[2] not in m_axis:
            raise MetricsError(f"cell {key} lies outside the declared grid")
    st = ScoreTable(a_axis, p_axis, m_axis, dict(U))
    for a in a_axis:
        for p in p_axis:
            mu = st.mean(a, p)
            if mu == 0:
                raise DegenerateMeanError(f"mean U score is zero for aspect {a}, property {p}")
            for i in m_axis:
                st.R_api[a, p, i] = U[a, p, i] / mu
    for i in m_axis:
        for a in a_axis:
            st.R_ai[a, i] = sum(st.R_api[a, p, i] for p in p_axis) / len(p_axis)
        for p in p_axis:
            st.R_pi[p, i] = sum(st.R_api[a, p, i] for a in a_axis) / len(a_axis)
        st.R_i[i] = sum(st.R_api[a, p, i] for a in a_axis for p in p_axis) / (len(a_axis) * len(p_axis))
    return st


# --- results files -----------------------------------------------------------


@dataclass(frozen=True)
class AccuracyRecord:
    model: str
    property: str
    aspect: str
    gsize: int
    accuracy: float


def parse_results(text: str) -> list[AccuracyRecord]:
    """CSV with header ``model,property,aspect,gsize,accuracy``."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].startswith("#")]
    if not rows:
        raise MetricsError("results file is empty")
    header = [h.strip() for h in rows[0]]
    if tuple(header) != RESULT_FIELDS:
        raise MetricsError(f"results header must be {','.join(RESULT_FIELDS)}, got {','.join(header)}")
    out = []
    seen = set()
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(RESULT_FIELDS):
            raise MetricsError(f"line {lineno}: expected {len(RESULT_FIELDS)} fields, got {len(row)}")
        model, prop, aspect, gsize, acc = (x.strip() for x in row)
        if aspect not in ASPECTS:
            raise MetricsError(f"line {lineno}: unknown aspect {aspect!r}")
        try:
            rec = AccuracyRecord(model, prop, aspect, int(gsize), float(acc))
        except ValueError:
            raise MetricsError(f"line {lineno}: bad number in {row!r}") from None
        if not 0.0 <= rec.accuracy <= 1.0:
            raise MetricsError(f"line {lineno}: accuracy {rec.accuracy} outside [0, 1]")
        key = (model, prop, aspect, rec.gsize)
        if key in seen:
            raise MetricsError(f"line {lineno}: duplicate result for {key}")
        seen.add(key)
        out.append(rec)
    return out


def read_results(path: str | os.PathLike) -> list[AccuracyRecord]:
    return parse_results(Path(path).read_text("utf-8"))


def u_grid(records: Iterable[AccuracyRecord],
           count: int | None = DEFAULT_SIZE_COUNT) -> dict[tuple[str, str, str], float]:
    points: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
    for r in records:
        points.setdefault((r.aspect, r.property, r.model), []).append((r.gsize, r.accuracy))
    grid = {}
    for key, pts in points.items():
        try:
            grid[key] = u_score(pts, count)
        except MetricsError as exc:
            raise MetricsError(f"cell {key}: {exc}") from None
    return grid


def score_records(records: Sequence[AccuracyRecord], count: int | None = DEFAULT_SIZE_COUNT,
                  property_order: Sequence[str] | None = None) -> ScoreTable:
    aspects = [a for a in ASPECTS if any(r.aspect == a for r in records)]
    props = _axis(r.property for r in records)
    if property_order is not None:
        rank = {p: k for k, p in enumerate(property_order)}
        seen = {p: k for k, p in enumerate(props)}
        props.sort(key=lambda p: (rank.get(p, len(rank)), seen[p]))
    models = _axis(r.model for r in records)
    return relative_scores(u_grid(records, count), aspects, props, models)


# --- tables ------------------------------------------------------------------


def _fmt(x: Number) -> str:
    return f"{float(x):.{DECIMALS}f}"


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_tables(st: ScoreTable,
                  records: Sequence[AccuracyRecord] = ()) -> dict[str, str]:
    """File name -> CSV text for the aspect, property, overall and per-size tables."""
    m = st.models
    files = {
        "aspects.csv": _csv(["aspect", *m], ([a, *(_fmt(st.R_ai[a, i]) for i in m)] for a in st.aspects)),
        "properties.csv": _csv(["property", *m],
                               ([p, *(_fmt(st.R_pi[p, i]) for i in m)] for p in st.properties)),
        "overall.csv": _csv(["scope", *m], [["overall", *(_fmt(st.R_i[i]) for i in m)]]),
        "u_scores.csv": _csv(["aspect", "property", *m],
                             ([a, p, *(_fmt(st.U[a, p, i]) for i in m)]
                              for a in st.aspects for p in st.properties)),
    }
    cells: dict[tuple[str, str], dict[int, dict[str, float]]] = {}
    for r in records:
        cells.setdefault((r.aspect, r.property), {}).setdefault(r.gsize, {})[r.model] = r.accuracy
    for (a, p), by_size in sorted(cells.items()):
        rows = ([str(g), *(_fmt(by_size[g][i]) if i in by_size[g] else "" for i in m)]
                for g in sorted(by_size))
        files[f"per_size/{a}__{p}.csv"] = _csv(["gsize", *m], rows)
    return files


def emit_tables(st: ScoreTable, out_dir: str | os.PathLike,
                records: Sequence[AccuracyRecord] = ()) -> list[Path]:
    out = Path(out_dir)
    written = []
    for name, text in render_tables(st, records).items():
        p = out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, "utf-8")
        written.append(p)
    return written
