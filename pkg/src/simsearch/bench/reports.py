"""Benchmark report emission: human-readable .rep and tab-separated .dat."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

RULE = "------------------------------------"
BANNER = "==================================="

DAT_FIELDS = [
    "MethodName", "Recall", "ClassAccuracy", "RelPosError", "NumCloser",
    "QueryTime", "DistComp", "ImprEfficiency", "ImprDistComp", "Mem",
    "NumData", "QueryQty", "IndexParams", "QueryTimeParams",
]


@dataclass
class ResultRow:
    """Aggregated metrics for one (method, query-time-param set) pair."""

    method_name: str
    method_desc: str
    index_params: str
    query_params: str
    num_data: int
    query_qty: int
    mem_mb: float
    clamped_positions: bool = False
    # metric -> (mean, ci_lo, ci_hi)
    metrics: dict = field(default_factory=dict)

    def metric(self, name: str) -> float:
        return self.metrics[name][0]


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def _ci(triple: tuple[float, float, float]) -> str:
    mean, lo, hi = triple
    return f"{_fmt(mean):<8} -> [{_fmt(lo)} {_fmt(hi)}]"


def format_report_block(row: ResultRow) -> str:
    m = row.metrics
    lines = [
        BANNER,
        row.method_desc,
        row.query_params or "(default query-time parameters)",
        BANNER,
        f"# of points: {row.num_data}",
        f"# of queries: {row.query_qty}",
        RULE,
        f"Recall:         {_ci(m['Recall'])}",
        f"ClassAccuracy:  {_ci(m['ClassAccuracy'])}",
        f"RelPosError:    {_ci(m['RelPosError'])}",
        f"NumCloser:      {_ci(m['NumCloser'])}",
        RULE,
        f"QueryTime:      {_ci(m['QueryTime'])}",
        f"DistComp:       {_ci(m['DistComp'])}",
        RULE,
        f"ImprEfficiency: {_ci(m['ImprEfficiency'])}",
        f"ImprDistComp:   {_ci(m['ImprDistComp'])}",
        RULE,
        f"Memory Usage:   {row.mem_mb:.1f} MB",
        RULE,
    ]
    if row.clamped_positions:
        lines.append("Note: some result positions exceeded the cached gold "
                     "standard depth and were clamped (raise "
                     "maxCacheGSRelativeQty for exact rank metrics).")
    return "\n".join(lines) + "\n"


def format_dat_row(row: ResultRow) -> str:
    m = row.metrics
    values = [
        row.method_name,
        repr(m["Recall"][0]), repr(m["ClassAccuracy"][0]),
        repr(m["RelPosError"][0]), repr(m["NumCloser"][0]),
        repr(m["QueryTime"][0]), repr(m["DistComp"][0]),
        repr(m["ImprEfficiency"][0]), repr(m["ImprDistComp"][0]),
        f"{row.mem_mb:.3f}", str(row.num_data), str(row.query_qty),
        row.index_params or "-", row.query_params or "-",
    ]
    return "\t".join(values)


def emit_reports(out_prefix: str, suffix: str, rows: list[ResultRow],
                 append: bool = False) -> tuple[str, str]:
    """Write (or extend) the .rep / .dat pair for one query type."""
    rep_path = f"{out_prefix}_{suffix}.rep"
    dat_path = f"{out_prefix}_{suffix}.dat"
    rep_mode = "a" if append and os.path.exists(rep_path) else "w"
    with open(rep_path, rep_mode, encoding="utf-8") as fh:
        for row in rows:
            fh.write(format_report_block(row))
            fh.write("\n")
    need_header = not (append and os.path.exists(dat_path)
                       and os.path.getsize(dat_path) > 0)
    with open(dat_path, "a" if not need_header else "w", encoding="utf-8") as fh:
        if need_header:
            fh.write("\t".join(DAT_FIELDS) + "\n")
        for row in rows:
            fh.write(format_dat_row(row) + "\n")
    return rep_path, dat_path
