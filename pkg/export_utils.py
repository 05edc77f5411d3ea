import io
import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from convergence import ConvergenceReport

FLOAT_FORMAT = "%.17g"
BASE_COLUMNS = ["param", "hs_distance", "op_norm", "tail_bound"]
POTENTIAL_COLUMNS = ["a", "tau", "bound"]

Target = Optional[Union[str, Path]]


def _json_number(value: Any) -> Any:
    """Non-finite floats become null so the document stays strict JSON"""
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if isinstance(obj, np.integer):
        return int(obj)
    return _json_number(obj)


class ReportExporter:
    """Write convergence reports and result tables as CSV or JSON"""

    def report_frame(self, report: ConvergenceReport) -> pd.DataFrame:
        columns = BASE_COLUMNS + (POTENTIAL_COLUMNS if report.study_id.is_potential else [])
        data = [{c: getattr(row, c) for c in columns} for row in report.rows]
        return pd.DataFrame(data, columns=columns)

    def frame_to_csv(self, df: pd.DataFrame, filename: Target = None) -> str:
        """CSV text when filename is None, otherwise the path written"""
        if filename is None:
            buf = io.StringIO()
            df.to_csv(buf, index=False, float_format=FLOAT_FORMAT)
            return buf.getvalue()
        df.to_csv(filename, index=False, float_format=FLOAT_FORMAT)
        return str(filename)

    def export_to_csv(self, report: ConvergenceReport, filename: Target = None) -> str:
        """Rows only: param,hs_distance,op_norm,tail_bound[,a,tau,bound]"""
        return self.frame_to_csv(self.report_frame(report), filename)

    def report_document(self, report: ConvergenceReport) -> Dict[str, Any]:
        return {
            "study_id": report.study_id.value,
            "fitted_rate": report.fitted_rate,
            "rows": self.report_frame(report).to_dict(orient="records"),
            "config": report.config,
        }

    def write_json(self, document: Dict[str, Any], filename: Target = None) -> str:
        text = json.dumps(_clean(document), indent=2, ensure_ascii=False)
        if filename is None:
            return text + "\n"
        with open(filename, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        return str(filename)

    def export_to_json(self, report: ConvergenceReport, filename: Target = None) -> str:
        return self.write_json(self.report_document(report), filename)

    def export_records(self, records: List[Dict[str, Any]], fmt: str = "csv",
                       filename: Target = None, meta: Optional[Dict[str, Any]] = None,
                       columns: Optional[List[str]] = None) -> str:
        """Generic tables (kernel values, bound states, expansion rows)"""
        if fmt == "json":
            return self.write_json({**(meta or {}), "rows": records}, filename)
        return self.frame_to_csv(pd.DataFrame(records, columns=columns), filename)

    def create_summary_report(self, report: ConvergenceReport) -> str:
        """Human-readable summary of one study"""
        if not report.rows:
            return "No rows to summarize"

        df = self.report_frame(report)
        failures = report.failures()
        window = report.rate_window()
        lines = [
            f"CONVERGENCE STUDY: {report.study_id.value}",
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            "=" * 60,
            f"  Grid points:      {len(df)}",
            f"  Parameter range:  {df['param'].min():.3g} .. {df['param'].max():.3g}",
            f"  HS distance:      {df['hs_distance'].iloc[0]:.6g} -> {df['hs_distance'].iloc[-1]:.6g}",
            f"  Operator norm:    {df['op_norm'].iloc[0]:.6g} -> {df['op_norm'].iloc[-1]:.6g}",
            f"  Max tail bound:   {df['tail_bound'].max():.3e}",
            f"  Fitted rate:      {report.fitted_rate:.4f}"
            + (f" (window {window[0]}..{window[1]})" if window else ""),
        ]
        if report.study_id.is_potential:
            lines.append(f"  Max tau:          {df['tau'].max():.4g}")
        lines.append(f"  Accepted:         {'yes' if not failures else 'no'}")
        lines.extend(f"    - {f}" for f in failures)
        return "\n".join(lines) + "\n"


# Convenience functions for easy import
def export_csv(report: ConvergenceReport, filename: Target = None) -> str:
    return ReportExporter().export_to_csv(report, filename)


def export_json(report: ConvergenceReport, filename: Target = None) -> str:
    return ReportExporter().export_to_json(report, filename)


def get_summary_report(report: ConvergenceReport) -> str:
    return ReportExporter().create_summary_report(report)
