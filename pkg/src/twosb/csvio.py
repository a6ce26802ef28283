"""Deterministic CSV emission for the data products.

Plain comma-separated values, one header row, decimal points, LF line
endings, 12 significant digits: identical inputs produce byte-identical
files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .calibration import CalibrationSet
from .compensation import SrrSpectrum
from .errors import ContourResult


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_calibration_csv(cal: CalibrationSet, path: str | Path) -> Path:
    header = (
        "channel_index", "if_freq_mhz",
        "X1_re", "X1_im", "X2_re", "X2_im",
        "c2_re", "c2_im", "c3_re", "c3_im",
    )
    rows = []
    for i, f in enumerate(cal.plan.if_grid_mhz):
        rows.append((
            i, f,
            cal.x1[i].real, cal.x1[i].imag,
            cal.x2[i].real, cal.x2[i].imag,
            cal.c2[i].real, cal.c2[i].imag,
            cal.c3[i].real, cal.c3[i].imag,
        ))
    return write_rows(path, header, rows)


def write_srr_csv(spectrum: SrrSpectrum, path: str | Path) -> Path:
    header = ("channel_index", "if_freq_mhz", "sideband", "raw_srr_db", "comp_srr_db", "above_cap")
    rows = []
    for k in range(len(spectrum)):
        i = int(spectrum.channel_index[k])
        rows.append((
            i,
            spectrum.plan.if_grid_mhz[i],
            spectrum.sideband[k].value,
            float(spectrum.raw_srr_db[k]),
            float(spectrum.compensated_srr_db[k]),
            bool(spectrum.above_cap[k]),
        ))
    return write_rows(path, header, rows)


def write_contour_csv(contours: Sequence[ContourResult], path: str | Path) -> Path:
    """One target per file; the m_a_db column is empty for the no-hybrid row set."""
    header = ("m_a_db", "dphi_deg", "x_lo", "x_hi")
    rows = []
    for contour in contours:
        label = "" if contour.m_a_db is None else fmt(float(contour.m_a_db))
        for p, lo, hi in zip(contour.dphi_deg, contour.x_lo, contour.x_hi):
            rows.append((label, float(p), float(lo), float(hi)))
    return write_rows(path, header, rows)


def write_errorbars_csv(rows: Sequence[Sequence], path: str | Path) -> Path:
    return write_rows(path, ("M_A_db", "m_uc_db", "err_lo_db", "err_hi_db"), rows)


def write_repetition_csv(rows: Sequence[Sequence], path: str | Path, index_name: str) -> Path:
    header = (index_name, "channel_index", "if_freq_mhz", "sideband",
              "raw_srr_db", "comp_srr_db", "above_cap")
    return write_rows(path, header, rows)


def write_montecarlo_csv(rows: Sequence[Sequence], path: str | Path) -> Path:
    header = ("x", "dphi_deg", "m_a_db", "dv_over_v", "n_samples",
              "mc_mean_db", "mc_half_width_68_db", "analytic_half_width_db")
    return write_rows(path, header, rows)


# ---------------------------------------------------------------------------
# gnuplot companion format: two columns, blank lines between blocks


def _plot_blocks(path: Path) -> list[list[tuple[float, float]]]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    blocks: list[list[tuple[float, float]]] = []
    if header[:4] == ["m_a_db", "dphi_deg", "x_lo", "x_hi"]:
        # one closed loop per m_a family
        series: dict[str, list[tuple[float, float, float]]] = {}
        order: list[str] = []
        for row in rows:
            key = row[0]
            if key not in series:
                series[key] = []
                order.append(key)
            series[key].append((float(row[1]), float(row[2]), float(row[3])))
        for key in order:
            pts = series[key]
            loop = [(p, lo) for p, lo, _ in pts] + [(p, hi) for p, _, hi in reversed(pts)]
            if loop and loop[0] != loop[-1]:
                loop.append(loop[0])
            blocks.append(loop)
    elif header[:4] == ["M_A_db", "m_uc_db", "err_lo_db", "err_hi_db"]:
        mid = [(float(r[0]), float(r[1])) for r in rows]
        lo = [(float(r[0]), float(r[1]) - float(r[2])) for r in rows]
        hi = [(float(r[0]), float(r[1]) + float(r[3])) for r in rows]
        blocks = [mid, lo, hi]
    else:
        raise ValueError(
            f"{path}: unrecognized CSV layout {header!r}; "
            "expected contour or error-bar columns"
        )
    return blocks


def write_plotdata(csv_path: str | Path, out_path: str | Path) -> Path:
    """Re-emit a contour or error-bar CSV as two-column gnuplot blocks."""
    blocks = _plot_blocks(Path(csv_path))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="\n") as fh:
        for k, block in enumerate(blocks):
            if k:
                fh.write("\n")
            for xv, yv in block:
                fh.write(f"{fmt(float(xv))} {fmt(float(yv))}\n")
    return out_path
