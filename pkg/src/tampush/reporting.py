"""Result tables and plot-data files.

Layout: results/<run-id>/{table.txt, curves/*.tsv, manifest} with
tab-separated numerics; cells read `median ± [lo_delta, hi_delta]` in
percent, asymmetric deltas allowed.
"""

from __future__ import annotations

import json
from pathlib import Path


class ReportError(Exception):
    pass


def format_cell(median: float, lo: float, hi: float) -> str:
    return (
        f"{100.0 * median:.1f} ± [{100.0 * (median - lo):.1f}, {100.0 * (hi - median):.1f}]"
    )


def results_table(rows) -> str:
    """rows: (label, median, lo, hi) tuples; emits a text table."""
    header = "policy\tsuccess"
    lines = [header]
    for label, median, lo, hi in rows:
        lines.append(f"{label}\t{format_cell(median, lo, hi)}")
    return "\n".join(lines) + "\n"


def curve_rows(checkpoint_results) -> list:
    """(epoch, median, lo, hi) rows for per-checkpoint curves."""
    return [
        (epoch, r.median, r.ci[0], r.ci[1])
        for epoch, r in sorted(checkpoint_results.items())
    ]


def write_results(directory, manifest: dict, table_text: str, curves: dict | None = None):
    directory = Path(directory)
    (directory / "curves").mkdir(parents=True, exist_ok=True)
    (directory / "table.txt").write_text(table_text)
    (directory / "manifest").write_text(json.dumps(manifest, sort_keys=True) + "\n")
    for name, rows in (curves or {}).items():
        lines = ["epoch\tmedian\tlo\thi"]
        for epoch, median, lo, hi in rows:
            lines.append(f"{epoch}\t{median:.6f}\t{lo:.6f}\t{hi:.6f}")
        (directory / "curves" / f"{name}.tsv").write_text("\n".join(lines) + "\n")
    return directory


def read_manifest(directory) -> dict:
    return json.loads((Path(directory) / "manifest").read_text())


def merge_results(directories, out_dir):
    """One merged table; refuses to mix results from different simulator
    configurations."""
    manifests = [read_manifest(d) for d in directories]
    hashes = {m.get("sim_config_hash") for m in manifests}
    if len(hashes) > 1:
        raise ReportError(f"sim config hash mismatch across results: {sorted(hashes)}")
    rows = []
    for d, m in zip(directories, manifests):
        table = (Path(d) / "table.txt").read_text().splitlines()[1:]
        rows.extend(table)
    text = "policy\tsuccess\n" + "\n".join(rows) + "\n"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.txt").write_text(text)
    (out / "manifest").write_text(
        json.dumps({"merged": [str(d) for d in directories],
                    "sim_config_hash": hashes.pop()}, sort_keys=True) + "\n"
    )
    return text
