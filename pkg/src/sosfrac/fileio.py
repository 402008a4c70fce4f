"""JSON problem files and solve reports."""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .cct import FractionalProgram, SolveReport
from .poly import Polynomial

SCHEMA_VERSION = "sosfrac-report/1"


class ParseError(ValueError):
    """The file is not valid JSON."""


class ValidationError(ValueError):
    """The JSON parses but does not describe a valid problem."""


# -- problems -------------------------------------------------------------


def polynomial_from_json(obj: Any, n: int, where: str) -> Polynomial:
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list):
        raise ValidationError(f"{where}: expected an object with a 'terms' array")
    terms = []
    for k, term in enumerate(obj["terms"]):
        if not isinstance(term, dict) or "alpha" not in term or "c" not in term:
            raise ValidationError(f"{where}.terms[{k}]: expected keys 'alpha' and 'c'")
        alpha, c = term["alpha"], term["c"]
        if not isinstance(alpha, list) or not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in alpha):
            raise ValidationError(f"{where}.terms[{k}].alpha must be a list of nonnegative integers")
        if len(alpha) != n:
            raise ValidationError(f"{where}.terms[{k}].alpha has length {len(alpha)}, expected n = {n}")
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
            raise ValidationError(f"{where}.terms[{k}].c must be a finite number")
        terms.append((alpha, float(c)))
    return Polynomial.from_terms(n, terms)


def polynomial_to_json(p: Polynomial) -> dict:
    return {"terms": [{"alpha": list(a), "c": c} for a, c in p.terms()]}


def problem_from_dict(doc: Any) -> FractionalProgram:
    if not isinstance(doc, dict):
        raise ValidationError("problem must be a JSON object")
    missing = [k for k in ("n", "f", "g") if k not in doc]
    if missing:
        raise ValidationError(f"missing keys: {', '.join(missing)}")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError(f"'n' must be a positive integer, got {n!r}")
    h_raw = doc.get("h", [])
    if not isinstance(h_raw, list):
        raise ValidationError("'h' must be an array")
    f = polynomial_from_json(doc["f"], n, "f")
    g = polynomial_from_json(doc["g"], n, "g")
    h = [polynomial_from_json(p, n, f"h[{i}]") for i, p in enumerate(h_raw)]
    return FractionalProgram(n, f, g, h)


def problem_to_dict(fp: FractionalProgram) -> dict:
    return {
        "n": fp.n,
        "f": polynomial_to_json(fp.f),
        "g": polynomial_to_json(fp.g),
        "h": [] if fp.sentinel else [polynomial_to_json(h) for h in fp.h],
    }


def load_problem(path) -> FractionalProgram:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return problem_from_dict(doc)


def save_problem(fp: FractionalProgram, path) -> None:
    Path(path).write_text(dumps(problem_to_dict(fp)) + "\n", encoding="utf-8")


# -- reports ----------------------------------------------------------------


def _num(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _vec(v) -> list | None:
    return None if v is None else [_num(a) for a in np.asarray(v, dtype=float)]


def report_to_dict(
    report: SolveReport,
    command: str = "solve",
    certificates: bool = False,
    moments: bool = False,
) -> dict:
    vr = report.verification
    residuals = {
        "feasibility": None,
        "dinkelbach": None,
        "kkt_stationarity": None,
        "kkt_complementarity": None,
        "gram": None,
        "duality_gap": _num(report.diagnostics.get("duality_gap")),
        "denominator_bound": _num(report.diagnostics.get("denominator_bound")),
        "oracle_value": None,
        "oracle_gap": None,
        "oracle_slack": None,
    }
    if vr is not None:
        residuals.update(
            feasibility=_num(vr.feasibility_residual),
            dinkelbach=_num(vr.dinkelbach_residual),
            kkt_stationarity=_num(vr.kkt_stationarity_norm),
            kkt_complementarity=_num(vr.kkt_complementarity_norm),
            gram=_num(vr.gram_residual),
            oracle_value=_num(vr.oracle_value),
            oracle_gap=_num(vr.oracle_gap),
            oracle_slack=_num(vr.oracle_slack),
        )
    diag = report.diagnostics
    slater = report.slater
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "status": report.status.value,
        "value": _num(report.value),
        "value_D": _num(report.value_D),
        "value_Q": _num(report.value_Q),
        "x_bar": _vec(report.x_bar),
        "y0": _num(report.y0),
        "lambda": _vec(report.lam),
        "gamma": _num(report.gamma),
        "attained": diag.get("attained"),
        "denominator_bounded": diag.get("denominator_bounded"),
        "sup_neg_g": _num(diag.get("sup_neg_g")),
        "slater": None
        if slater is None
        else {
            "satisfied": slater.satisfied.value,
            "witness": _vec(slater.witness),
            "tau": _num(slater.tau),
        },
        "screening": {k: v.value for k, v in report.screening.items()},
        "residuals": residuals,
        "solvers": {
            k: {"status": diag[k]["status"], "solver": diag[k]["solver"]} for k in ("Q", "D") if k in diag
        },
        "notes": list(report.notes),
        "certificates": None,
        "moments": None,
        "config_echo": report.config.echo() if report.config else {},
        "timings": {k: round(v, 6) for k, v in diag.get("timings", {}).items()},
    }
    if certificates and report.certificate is not None:
        c = report.certificate
        out["certificates"] = {
            "D": {
                "basis": [list(b) for b in c.basis],
                "gram": [_vec(row) for row in c.Q],
                "min_eigenvalue": _num(c.min_eigenvalue),
                "coefficient_residual": _num(c.coefficient_residual),
            }
        }
    if moments and report.moments is not None:
        from .poly import monomial_basis

        mv = report.moments
        out["moments"] = {
            "n": mv.n,
            "d": mv.d,
            "basis": [list(a) for a in monomial_basis(mv.n, 2 * mv.d)],
            "y": _vec(mv.y),
        }
    return out


def _render(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        # keep a float a float when read back
        if not any(ch in text for ch in ".eEn"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_render(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_render(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _render(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _render(obj, indent, 0)


def report_schema() -> dict:
    text = resources.files("sosfrac").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
