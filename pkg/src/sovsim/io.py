"""Trajectory, sweep and report export, run manifests and SVG charts."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import MetricsFrame

FIXED_COLUMNS = (
    "step", "e_d_ai_total", "e_c_top_human", "e_c_top_ai_restricted", "sovereign_id",
    "sovereign_is_ai", "traceability_bound", "empirical_traceability", "n_actions", "p_irr",
    "concentration", "review_level",
)
SWEEP_COLUMNS = (
    "param_value", "transfer_rate", "mean_first_transfer_step",
    "final_concentration_mean", "final_p_irr_mean",
)


def fmt(x) -> str:
    """Locale-independent rendering: integers verbatim, floats with 9
    significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".9g")


def _round9(x: float):
    x = float(x)
    return None if math.isnan(x) else float(format(x, ".9g"))


def trajectory_columns(node_ids: Sequence[int]) -> list[str]:
    cols = list(FIXED_COLUMNS)
    for i in node_ids:
        cols += [f"lambda_{i}", f"share_{i}", f"friction_{i}"]
    return cols


def frame_row(frame: MetricsFrame) -> dict:
    row = {
        "step": frame.step,
        "e_d_ai_total": frame.e_d_ai_total,
        "e_c_top_human": frame.e_c_top_human,
        "e_c_top_ai_restricted": frame.e_c_top_ai_restricted,
        "sovereign_id": frame.sovereign_id,
        "sovereign_is_ai": frame.sovereign_is_ai,
        "traceability_bound": frame.traceability,
        "empirical_traceability": frame.empirical_traceability,
        "n_actions": frame.n_actions,
        "p_irr": frame.p_irr,
        "concentration": frame.concentration,
        "review_level": frame.review_level,
    }
    for i in frame.lam:
        row[f"lambda_{i}"] = frame.lam[i]
        row[f"share_{i}"] = frame.share[i]
        row[f"friction_{i}"] = frame.friction[i]
    return row


def render_trajectory(frames: Sequence[MetricsFrame], fmt_name: str = "csv", node_ids: Sequence[int] | None = None) -> str:
    if node_ids is None:
        node_ids = list(frames[0].lam) if frames else []
    cols = trajectory_columns(node_ids)
    rows = [frame_row(f) for f in frames]
    if fmt_name == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in cols])
        return buf.getvalue()
    if fmt_name == "json":
        out = []
        for row in rows:
            out.append({
                c: (row[c] if isinstance(row[c], (bool, int)) else _round9(row[c])) for c in cols
            })
        return json.dumps({"columns": cols, "frames": out}, indent=1) + "\n"
    raise ValueError(f"unknown format '{fmt_name}'")


def write_trajectory(frames: Sequence[MetricsFrame], fmt_name: str, destination, node_ids=None) -> int:
    """Write frames to ``destination`` (path or text stream); returns bytes written."""
    data = render_trajectory(frames, fmt_name, node_ids).encode()
    if hasattr(destination, "write"):
        destination.write(data.decode())
    else:
        Path(destination).write_bytes(data)
    return len(data)


def _parse_cell(col: str, text: str):
    if col == "sovereign_is_ai":
        return text == "true"
    if col in ("step", "sovereign_id", "n_actions"):
        return int(text)
    return float(text)


def read_trajectory_csv(path_or_text) -> list[dict]:
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else str(path_or_text)
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(k, v) for k, v in row.items()} for row in reader]


# -------------------------------------------------------------- sweep / json


def render_sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([fmt(getattr(r, c)) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ manifest


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_manifest(out_dir: Path, config_bytes: bytes | None, seed: int | None, argv: Sequence[str],
                   outputs: Iterable[str], version: str) -> Path:
    manifest = {
        "tool": "sovsim",
        "version": version,
        "config_digest": sha256_bytes(config_bytes) if config_bytes is not None else None,
        "base_seed": seed,
        "command_line": list(argv),
        "started": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "outputs": sorted(outputs),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


# ---------------------------------------------------------------------- svg


def svg_line_chart(xs, series: dict[str, Sequence[float]], xlabel: str, ylabel: str, title: str = "",
                   width: int = 640, height: int = 400) -> str:
    """Self-contained SVG line chart; non-finite points are skipped."""
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    left, right, top, bottom = 70, 20, 40, 50
    pts = [y for ys in series.values() for y in ys if math.isfinite(y)]
    x_lo, x_hi = (min(xs), max(xs)) if len(xs) else (0.0, 1.0)
    y_lo, y_hi = (min(pts), max(pts)) if pts else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for k in range(5):
        xv = x_lo + (x_hi - x_lo) * k / 4
        yv = y_lo + (y_hi - y_lo) * k / 4
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{ylabel}</text>')
    for idx, (name, ys) in enumerate(series.items()):
        color = colors[idx % len(colors)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{left + pw - 4}" y="{top + 14 + 14 * idx}" text-anchor="end" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
