from __future__ import annotations

import csv
from pathlib import Path


def load_external_scores(path) -> dict[str, float]:
    """Read ``path,score`` rows (e.g. DBCNN scores computed elsewhere), keyed by file stem and path."""
    scores = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "score"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'path,score'")
        for line, row in enumerate(reader, start=2):
            try:
                value = float(row["score"])
            except ValueError as exc:
                raise ValueError(f"{path}:{line}: bad score {row['score']!r}") from exc
            scores[Path(row["path"]).as_posix()] = value
            scores.setdefault(Path(row["path"]).stem, value)
    return scores
