"""Session-log analysis: error percentiles, zone ventilation, figures.

Reads the session CSV written by the simulator, summarises the share
tracking error distribution and per-zone physiology, writes the summary
as CSV and renders matplotlib figures next to it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .route import ZoneKind
from .sim import LOG_COLUMNS

PERCENTILES = (5, 10, 25, 50, 75, 90, 95)
DEFAULT_SETTLE_S = 30.0

_FLOAT_COLUMNS = {
    "t", "position", "v", "tau_p", "p_hp", "p_me", "p_hw", "p_mw",
    "m", "m_star", "m_bar", "e", "hr", "ve", "dose", "battery_ah",
}
_INT_COLUMNS = {"y_tilde", "request"}


class LogFormatError(ValueError):
    """Session CSV missing columns or holding unparseable values."""


def load_log(path: str | Path) -> list[dict]:
    """Parse a session CSV into typed row dicts (empty cells become None)."""
    rows: list[dict] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != LOG_COLUMNS:
            raise LogFormatError(f"{path}: expected columns {','.join(LOG_COLUMNS)}")
        for lineno, raw in enumerate(reader, start=2):
            row: dict = {}
            for key, text in raw.items():
                if text is None:
                    raise LogFormatError(f"{path}:{lineno}: short row")
                if key in _FLOAT_COLUMNS:
                    row[key] = float(text) if text != "" else None
                elif key in _INT_COLUMNS:
                    row[key] = int(text)
                else:
                    row[key] = text
            rows.append(row)
    return rows


@dataclass(frozen=True)
class ReportSummary:
    """Headline numbers for one session."""

    error_percentiles: dict[int, float]
    frac_within_10pct: float
    mean_ve_by_zone: dict[str, float]
    total_dose_ug: float
    hr_peak: float
    hr_min: float
    n_ticks: int
    n_error_samples: int

    def lines(self) -> list[str]:
        out = []
        if self.error_percentiles:
            for p in PERCENTILES:
                out.append(f"error p{p}: {self.error_percentiles[p]:+.2f}%")
            out.append(f"|error| <= 10%: {self.frac_within_10pct * 100.0:.1f}% of controller ticks")
        else:
            out.append("no tracking-error samples (open-loop log)")
        for kind, ve in sorted(self.mean_ve_by_zone.items()):
            out.append(f"steady mean ventilation [{kind}]: {ve:.1f} L/min")
        out.append(f"total inhaled dose: {self.total_dose_ug:.2f} ug")
        out.append(f"heart rate peak/min: {self.hr_peak:.1f} / {self.hr_min:.1f} BPM")
        return out

    def rows(self) -> list[tuple[str, str]]:
        rows: list[tuple[str, str]] = []
        for p in PERCENTILES:
            value = self.error_percentiles.get(p)
            rows.append((f"error_p{p}_pct", "" if value is None else repr(value)))
        rows.append(("frac_within_10pct", repr(self.frac_within_10pct) if self.error_percentiles else ""))
        for kind in sorted(self.mean_ve_by_zone):
            rows.append((f"mean_ve_{kind}_lpm", repr(self.mean_ve_by_zone[kind])))
        rows.append(("total_dose_ug", repr(self.total_dose_ug)))
        rows.append(("hr_peak_bpm", repr(self.hr_peak)))
        rows.append(("hr_min_bpm", repr(self.hr_min)))
        rows.append(("n_ticks", str(self.n_ticks)))
        rows.append(("n_error_samples", str(self.n_error_samples)))
        return rows


def percentile_interp(values: list[float], q: float) -> float:
    """q-th percentile by linear interpolation between order statistics."""
    if not values:
        raise ValueError("no samples")
    return float(np.percentile(np.asarray(values, dtype=float), q, method="linear"))


def steady_zone_ventilation(
    rows: list[dict],
    settle_s: float = DEFAULT_SETTLE_S,
) -> dict[str, float]:
    """Mean ventilation per zone kind, skipping the first settle_s after
    each zone entry so entry transients do not bias the steady levels.
    Transient zones are excluded (they are never steady)."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    entry_t: float | None = None
    prev_zone: str | None = None
    for row in rows:
        zone = row["zone"]
        if zone != prev_zone:
            entry_t = row["t"]
            prev_zone = zone
        if zone == ZoneKind.TRANSIENT.value:
            continue
        if row["t"] - entry_t < settle_s:
            continue
        sums[zone] = sums.get(zone, 0.0) + row["ve"]
        counts[zone] = counts.get(zone, 0) + 1
    return {zone: sums[zone] / counts[zone] for zone in sums}


def zone_dose(rows: list[dict], kind: str) -> float:
    """Dose accumulated while inside zones of one kind (from the cumulative column)."""
    total = 0.0
    prev_dose = 0.0
    for row in rows:
        if row["zone"] == kind:
            total += row["dose"] - prev_dose
        prev_dose = row["dose"]
    return total


def summarise(rows: list[dict], settle_s: float = DEFAULT_SETTLE_S) -> ReportSummary:
    if not rows:
        raise LogFormatError("session log has no rows")
    errors = [row["e"] for row in rows if row["e"] is not None]
    percentiles: dict[int, float] = {}
    frac = 0.0
    if errors:
        percentiles = {p: percentile_interp(errors, p) * 100.0 for p in PERCENTILES}
        frac = sum(1 for e in errors if abs(e) <= 0.10) / len(errors)
    hr = [row["hr"] for row in rows]
    return ReportSummary(
        error_percentiles=percentiles,
        frac_within_10pct=frac,
        mean_ve_by_zone=steady_zone_ventilation(rows, settle_s),
        total_dose_ug=rows[-1]["dose"],
        hr_peak=max(hr),
        hr_min=min(hr),
        n_ticks=len(rows),
        n_error_samples=len(errors),
    )


def write_summary_csv(summary: ReportSummary, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("metric", "value"))
        for key, value in summary.rows():
            writer.writerow((key, value))


_ZONE_COLORS = {
    ZoneKind.NON_POLLUTED.value: "#d8f0d8",
    ZoneKind.TRANSIENT.value: "#fff2cc",
    ZoneKind.POLLUTED.value: "#f4cccc",
}


def _shade_zones(ax, rows: list[dict]) -> None:
    start_t = rows[0]["t"]
    zone = rows[0]["zone"]
    for row in rows[1:]:
        if row["zone"] != zone:
            ax.axvspan(start_t, row["t"], color=_ZONE_COLORS.get(zone, "#eeeeee"), lw=0)
            start_t = row["t"]
            zone = row["zone"]
    ax.axvspan(start_t, rows[-1]["t"], color=_ZONE_COLORS.get(zone, "#eeeeee"), lw=0)


def render_figures(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Render the session figures as PNG files; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    t = [row["t"] for row in rows]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    _shade_zones(ax1, rows)
    ax1.plot(t, [row["m_star"] for row in rows], "b-", lw=1.2, label="target share m*")
    ct = [(row["t"], row["m_bar"]) for row in rows if row["m_bar"] is not None]
    if ct:
        ax1.plot([c[0] for c in ct], [c[1] for c in ct], "r.", ms=3, label="smoothed share")
    ax1.set_ylabel("human share")
    ax1.set_ylim(-0.05, 1.1)
    ax1.legend(loc="upper right", fontsize=8)
    _shade_zones(ax2, rows)
    ax2.plot(t, [row["y_tilde"] for row in rows], "k-", lw=1.0, drawstyle="steps-post")
    ax2.set_ylabel("assist level")
    ax2.set_xlabel("time (s)")
    fig.tight_layout()
    path = out_dir / "tracking.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    errors = [row["e"] for row in rows if row["e"] is not None]
    if errors:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.hist([e * 100.0 for e in errors], bins=40, color="#4477aa", edgecolor="white")
        ax.axvline(10.0, color="r", ls="--", lw=1)
        ax.axvline(-10.0, color="r", ls="--", lw=1)
        ax.set_xlabel("tracking error (%)")
        ax.set_ylabel("controller ticks")
        fig.tight_layout()
        path = out_dir / "error_distribution.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    _shade_zones(ax1, rows)
    ax1.plot(t, [row["hr"] for row in rows], "b-", lw=1.2)
    ax1.set_ylabel("heart rate (BPM)")
    ax1b = ax1.twinx()
    ax1b.plot(t, [row["ve"] for row in rows], "k-", lw=1.0)
    ax1b.set_ylabel("ventilation (L/min)")
    _shade_zones(ax2, rows)
    ax2.plot(t, [row["dose"] for row in rows], "r-", lw=1.2)
    ax2.set_ylabel("cumulative dose (ug)")
    ax2.set_xlabel("time (s)")
    fig.tight_layout()
    path = out_dir / "physiology.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
