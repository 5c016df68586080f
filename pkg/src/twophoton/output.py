"""Self-describing CSV tables and gnuplot sidecars."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

FLOAT_FORMAT = "{:.12g}"


def format_value(value) -> str:
    """Locale- and platform-independent text for one cell."""
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def header_lines(meta: Mapping[str, object]) -> list[str]:
    return [f"# {key} = {format_value(val)}" for key, val in meta.items()]


def write_table(path: str | Path, columns: Mapping[str, Sequence], meta: Mapping[str, object]) -> Path:
    """Write ``columns`` (equal-length sequences) as CSV behind a ``#`` header.

    The header lists ``meta`` as ``key = value`` lines followed by the column
    names; the file carries no timestamps so reruns are byte-identical.
    """
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]) if not isinstance(columns[n], list) else columns[n] for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"column lengths differ: {sorted(lengths)}")
    lines = header_lines(meta)
    lines.append("# columns = " + ",".join(names))
    lines.append(",".join(names))
    for row in zip(*cols):
        lines.append(",".join(format_value(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


_PLOTS = {
    "map": "set view map\nsplot '{csv}' using {x}:{y}:{z} with image title '{title}'\n",
    "line": "plot '{csv}' using {x}:{z} with lines title '{title}'\n",
}


def write_plot_script(path: str | Path, csv_name: str, kind: str, columns: Sequence[str],
                      x: str, z: str, y: str | None = None, title: str = "") -> Path:
    """Gnuplot script reading ``csv_name``; the tool never runs it."""
    idx = {name: i + 1 for i, name in enumerate(columns)}
    body = _PLOTS[kind].format(csv=csv_name, x=idx[x], y=idx.get(y, 0), z=idx[z], title=title)
    text = (
        "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        f"set xlabel '{x}'\n"
        + (f"set ylabel '{y}'\n" if y else f"set ylabel '{z}'\n")
        + "set key autotitle columnhead\n"
        + body
    )
    path = Path(path)
    path.write_text(text)
    return path
