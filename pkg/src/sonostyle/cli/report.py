"""Report bundle: per-image quality rows, per-pair similarity rows, run metadata.

Emitted tables use 4-decimal half-up formatting. Markdown quality tables
carry the direction of each metric in the header.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..simeval import SimilarityReport, fmt4

QUALITY_MD_HEADER = {
    "image": "Methods \\ Metrics", "dbcnn": "DBCNN (higher - better)", "niqe": "NIQE (lower - better)",
    "brisque": "BRISQUE (lower - better)",
}


@dataclass(frozen=True)
class QualityReport:
    image: str
    niqe: float
    brisque: float
    dbcnn: float | None = None


@dataclass
class ReportBundle:
    quality: list = field(default_factory=list)
    similarity: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def has_dbcnn(self) -> bool:
        return any(q.dbcnn is not None for q in self.quality)

    def to_json(self) -> str:
        data = {"metadata": self.metadata, "quality": [asdict(q) for q in self.quality],
                "similarity": [asdict(s) for s in self.similarity]}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        data = json.loads(text)
        return cls([QualityReport(**q) for q in data["quality"]],
                   [SimilarityReport(**s) for s in data["similarity"]], data["metadata"])


def quality_columns(bundle: ReportBundle) -> list[str]:
    return ["image", "dbcnn", "niqe", "brisque"] if bundle.has_dbcnn else ["image", "niqe", "brisque"]


def _quality_cells(q: QualityReport, columns) -> list[str]:
    cells = []
    for c in columns:
        v = getattr(q, c)
        cells.append(v if c == "image" else ("" if v is None else fmt4(v)))
    return cells


def quality_csv(bundle: ReportBundle) -> str:
    cols = quality_columns(bundle)
    lines = [",".join(cols)]
    lines += [",".join(_csv_escape(c) for c in _quality_cells(q, cols)) for q in bundle.quality]
    return "\n".join(lines) + "\n"


def similarity_csv(bundle: ReportBundle) -> str:
    lines = ["pair_id,cosine,phash,average"]
    lines += [",".join(_csv_escape(c) for c in s.row()) for s in bundle.similarity]
    return "\n".join(lines) + "\n"


def _csv_escape(cell: str) -> str:
    if any(ch in cell for ch in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def _md_row(cells) -> str:
    return "| " + " | ".join(cells) + " |"


def quality_markdown(bundle: ReportBundle, title: str = "Quality assessment results") -> str:
    cols = quality_columns(bundle)
    out = [f"**{title}**", "", _md_row(QUALITY_MD_HEADER[c] for c in cols),
           _md_row(["---"] + ["---:"] * (len(cols) - 1))]
    out += [_md_row(_quality_cells(q, cols)) for q in bundle.quality]
    return "\n".join(out) + "\n"


def similarity_markdown(bundle: ReportBundle, title: str = "Similarity evaluation results") -> str:
    """Metrics as rows and pairs as columns."""
    pairs = bundle.similarity
    out = [f"**{title}**", "", _md_row(["Metrics"] + [s.pair_id for s in pairs]),
           _md_row(["---"] + ["---:"] * len(pairs))]
    for label, attr in (("Cosine similarity", "cosine"), ("Perceptual Hash", "phash"),
                        ("Average similarity", "average")):
        out.append(_md_row([label] + [fmt4(getattr(s, attr)) for s in pairs]))
    return "\n".join(out) + "\n"


def emit_report(bundle: ReportBundle, directory, formats=("csv", "markdown")) -> list[Path]:
    """Write the bundle's tables into ``directory``; returns the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        path = directory / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)

    for fmt in formats:
        if fmt == "csv":
            put("quality.csv", quality_csv(bundle))
            put("similarity.csv", similarity_csv(bundle))
        elif fmt == "markdown":
            put("quality.md", quality_markdown(bundle))
            put("similarity.md", similarity_markdown(bundle))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    put("metadata.json", json.dumps(bundle.metadata, indent=2, sort_keys=True) + "\n")
    return written


__all__ = ["QualityReport", "ReportBundle", "emit_report", "quality_csv", "quality_markdown", "similarity_csv",
           "similarity_markdown"]
