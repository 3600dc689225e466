"""Deterministic rendering of run reports into text and CSV."""

from __future__ import annotations

import csv
import io
import json

# stable column order per known table
SCHEMAS = {
    "quads": ["lam_re", "lam_im", "a_re", "a_im", "b_re", "b_im", "alpha_re", "alpha_im", "beta_re", "beta_im"],
    "green": ["lam_re", "lam_im", "residual_h2"],
    "eigen": ["lam_re", "lam_im", "kind", "solver_residual", "schrodinger_residual", "exceptional"],
    "determinant": ["lam_re", "lam_im", "delta_re", "delta_im", "realness", "symmetry"],
    "shift": ["lam_re", "lam_im", "entry", "closed_form_re", "closed_form_im", "recomputed_re", "recomputed_im",
              "rel_error"],
    "evolve": ["lam_re", "lam_im", "law", "measured_re", "measured_im", "predicted_re", "predicted_im", "mismatch"],
    "dbar": ["lam_re", "lam_im", "check", "step", "mismatch"],
    "audit": ["step", "value", "tol", "passed"],
    "roots": ["c_re", "c_im", "esign", "root_re", "root_im", "modulus"],
    "mass": ["step", "mass"],
    "reconstruct": ["quantity", "value"],
}


class ReportSchemaError(ValueError):
    """A report row does not fit its table schema."""


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render_csv(name: str, rows: list, config_hash: str = "") -> str:
    """CSV text for one table; header-only when ``rows`` is empty."""
    cols = SCHEMAS.get(name)
    if cols is None:
        cols = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        extra = set(r) - set(cols)
        if extra:
            raise ReportSchemaError(f"table {name!r}: unexpected columns {sorted(extra)}")
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def report_render(report: dict) -> tuple[str, dict[str, str]]:
    """Human-readable summary plus one CSV string per table.

    Output depends only on the report content, so rendering twice gives
    identical bytes.

    Raises
    ------
    ReportSchemaError
        Missing ``command`` or a row outside its table schema.
    """
    if "command" not in report:
        raise ReportSchemaError("report has no 'command'")
    h = report.get("config_hash", "")
    lines = [f"command: {report['command']}", f"config_hash: {h}"]
    if "passed" in report:
        lines.append(f"status: {'PASS' if report['passed'] else 'FAIL'}")
    for k, v in sorted(report.get("summary", {}).items()):
        lines.append(f"  {k}: {json.dumps(v, sort_keys=True)}")
    tables = {}
    for name in sorted(report.get("tables", {})):
        rows = report["tables"][name]
        tables[name] = render_csv(name, rows, h)
        lines.append(f"table {name}: {len(rows)} rows")
    if report["command"] == "audit":
        for r in report.get("tables", {}).get("audit", []):
            mark = "ok  " if r["passed"] else "FAIL"
            lines.append(f"  [{mark}] {r['step']}: {r['value']:.3e} (tol {r['tol']:.1e})")
    return "\n".join(lines) + "\n", tables
