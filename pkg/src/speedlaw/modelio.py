"""Text serialization: model files, sample CSVs, report JSON.

The model format is line-oriented with [target] and [model] sections
followed by a [table] section tabulating x, nu, sigma_sq on a grid.  Floats
are written with repr so a write/read/write cycle is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from typing import Iterable

import numpy as np

from .engines import TerminalSample
from .errors import FormatError, InvalidParameters
from .measures import TargetMeasure, build_builtin, from_samples
from .synthesis import DiffusionModel, synthesize

FORMAT_VERSION = 1


def atomic_write(path, text: str) -> None:
    """Write via a temp file and rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-speedlaw-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _target_lines(target: TargetMeasure) -> list[str]:
    lines = ["[target]"]
    if target.family is not None:
        lines.append(f"family = {target.family}")
        lines.append("params = " + ", ".join(_fmt(v) for v in target.family_params))
    elif not target.pieces:
        pairs = "; ".join(f"{_fmt(x)}:{_fmt(w)}" for x, w in target.atoms)
        lines.append(f"atoms = {pairs}")
    else:
        raise InvalidParameters(
            "only builtin families and purely atomic targets serialize to model files"
        )
    return lines


def _model_lines(model: DiffusionModel) -> list[str]:
    return [
        "[model]",
        f"format_version = {FORMAT_VERSION}",
        f"x0 = {_fmt(model.x0)}",
        f"lambda = {_fmt(model.lam)}",
        f"wronskian = {_fmt(model.wronskian)}",
        f"wronskian_sup = {_fmt(model.wronskian_sup)}",
        f"boundary_left = {model.boundaries[0].value}",
        f"boundary_right = {model.boundaries[1].value}",
    ]


def model_hash(model: DiffusionModel) -> str:
    """Stable 12-hex digest of the target and model sections."""
    head = "\n".join(_target_lines(model.target) + _model_lines(model))
    return hashlib.sha256(head.encode()).hexdigest()[:12]


def default_table_grid(model: DiffusionModel, n: int = 201) -> np.ndarray:
    """Evenly spaced quantile grid over the truncated range plus key points."""
    t = model.target
    a, b = t.support
    lo = a if math.isfinite(a) else float(t.quantile(1e-6))
    hi = b if math.isfinite(b) else float(t.quantile(1.0 - 1e-6))
    pts = set(np.linspace(lo, hi, n).tolist())
    pts.add(model.x0)
    pts.update(x for x, _ in t.atoms if lo <= x <= hi)
    return np.array(sorted(pts))


def model_to_text(model: DiffusionModel, grid=None) -> str:
    if grid is None:
        grid = default_table_grid(model)
    grid = np.asarray(grid, dtype=float)
    nu = np.asarray(model.speed_density(grid), dtype=float)
    ss = np.asarray(model.sigma_sq(grid), dtype=float)
    lines = _target_lines(model.target) + [""] + _model_lines(model)
    lines += ["", "[table]", "x,nu,sigma_sq"]
    for x, n_, s_ in zip(grid, nu, ss):
        lines.append(f"{_fmt(x)},{_fmt(n_)},{_fmt(s_)}")
    return "\n".join(lines) + "\n"


def write_model(model: DiffusionModel, path, grid=None) -> None:
    atomic_write(path, model_to_text(model, grid))


def _parse_sections(text: str) -> tuple[dict, dict, list[str]]:
    section = None
    target: dict[str, str] = {}
    meta: dict[str, str] = {}
    table: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        if section == "table":
            table.append(line)
        elif section in ("target", "model"):
            if "=" not in line:
                raise FormatError(f"expected key = value, got {line!r}")
            key, _, val = line.partition("=")
            (target if section == "target" else meta)[key.strip()] = val.strip()
        else:
            raise FormatError(f"content outside any section: {line!r}")
    if not target or not meta:
        raise FormatError("model file needs [target] and [model] sections")
    return target, meta, table


def parse_model_text(text: str) -> DiffusionModel:
    """Rebuild a model from its text form (the table is advisory output)."""
    tgt, meta, _ = _parse_sections(text)
    if "family" in tgt:
        params = [float(v) for v in tgt.get("params", "").split(",") if v.strip()]
        target = build_builtin(tgt["family"], params)
    elif "atoms" in tgt:
        pairs = [p for p in tgt["atoms"].split(";") if p.strip()]
        try:
            locs = [float(p.split(":")[0]) for p in pairs]
            wts = [float(p.split(":")[1]) for p in pairs]
        except (ValueError, IndexError) as exc:
            raise FormatError(f"bad atoms entry ({exc})")
        target = from_samples(locs, wts)
    else:
        raise FormatError("[target] needs either family/params or atoms")
    try:
        x0 = float(meta["x0"])
        lam = float(meta["lambda"])
        w = float(meta["wronskian"])
    except KeyError as exc:
        raise FormatError(f"[model] missing {exc}")
    except ValueError as exc:
        raise FormatError(f"bad model value ({exc})")
    return synthesize(target, x0, lam, w)


def read_model(path) -> DiffusionModel:
    with open(path) as fh:
        return parse_model_text(fh.read())


def samples_to_csv(
    sample: TerminalSample, model: DiffusionModel, config_line: str = ""
) -> str:
    lines = [
        f"# model_hash = {model_hash(model)}",
        f"# engine = {sample.engine}",
        f"# seed = {sample.seed}",
        f"# n_paths = {len(sample.values)}",
        f"# truncation_hits = {sample.truncation_hits}",
    ]
    if config_line:
        lines.append(f"# config = {config_line}")
    lines.append("value")
    lines.extend(_fmt(v) for v in sample.values)
    return "\n".join(lines) + "\n"


def write_samples(sample: TerminalSample, model: DiffusionModel, path, config_line="") -> None:
    atomic_write(path, samples_to_csv(sample, model, config_line))


def report_to_json(report_dict: dict) -> str:
    return json.dumps(report_dict, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_report(report_dict: dict, path) -> None:
    atomic_write(path, report_to_json(report_dict))


def table_to_csv(columns: Iterable[str], rows: np.ndarray) -> str:
    lines = [",".join(columns)]
    for row in np.asarray(rows, dtype=float):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"
