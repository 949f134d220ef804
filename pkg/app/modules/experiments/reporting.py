"""
Report, trace and chart writers
"""
import csv
from pathlib import Path
from typing import Dict, List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from app.schemas.experiment import ReportRecord  # noqa: E402
from app.utils.logger import logger  # noqa: E402

# Fixed hash salt so SVG element ids do not change between runs
plt.rcParams["svg.hashsalt"] = "minkowski-lab"


def writeReport(record: ReportRecord, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record.model_dump_json(indent=2, exclude_none=True))
    logger.info(f"✅ Report written: {path}")
    return path


def writeTrace(rows: Sequence[Dict[str, float]], path: Union[str, Path], columns: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(row[k])) for k in columns})
    return path


def plotTrace(
    rows: Sequence[Dict[str, float]],
    path: Union[str, Path],
    x: str,
    ys: List[str],
    title: str,
) -> Path:
    """Line chart of trace columns as SVG"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        xs = [row[x] for row in rows]
        for key in ys:
            ax.plot(xs, [row[key] for row in rows], marker="o", label=key)
        ax.set_xlabel(x)
        ax.set_ylabel(", ".join(ys))
        ax.set_title(title)
        ax.legend()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
