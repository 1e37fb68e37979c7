"""Config files, result persistence and figure emission.

Configs are strict JSON (unknown keys are rejected by name), results go to
CSV with a fixed schema, figures are self-contained SVG written as text so
there is no runtime plotting dependency.  All files are written to a
temporary name and renamed, so a failure never leaves a partial file, and a
run manifest listing each artifact with its content digest is written after
the outputs themselves.
"""

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .experiment import SweepConfig
from .model import ProblemConfig

TOOL_VERSION = "0.1.0"

CSV_HEADER = "procedure,p,k,s,n,beta,rho,n_runs,n_success,p_success,ci_low,ci_high"

_PANEL_W, _PANEL_H, _MARGIN = 360, 260, 56
_COLORS = {"lasso": "#1f77b4", "group_l2": "#d62728",
           "group_linf": "#2ca02c", "union": "#9467bd"}


class ConfigError(ValueError):
    """A config file failed schema or invariant validation."""


def parse_config(path):
    """Load a ProblemConfig or SweepConfig from strict JSON.

    The kind is detected from the keys: sweep configs carry p_list.  Unknown
    keys and invariant violations raise ConfigError naming the offender.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    try:
        if "p_list" in data:
            return SweepConfig.from_json_dict(data)
        return ProblemConfig.from_json_dict(data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_config(config, path):
    """Serialize a config back to JSON (round-trips through parse_config)."""
    _atomic_write(path, (json.dumps(config.to_json_dict(), indent=2, sort_keys=True)
                         + "\n").encode())


def config_digest(config):
    """sha256 over the canonical JSON form of a config."""
    blob = json.dumps(config.to_json_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _atomic_write(path, payload):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mtsr-tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


@dataclass
class RunManifest:
    command: str
    config_digest: str
    master_seed: int
    tool_version: str = TOOL_VERSION
    started: str = ""
    finished: str = ""
    outputs: list = field(default_factory=list)  # [{"path": ..., "sha256": ...}]

    def to_json_dict(self):
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "started": self.started,
            "finished": self.finished,
            "outputs": list(self.outputs),
        }


def _utcnow():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(command, digest, master_seed, started, paths, manifest_path):
    """List every artifact with its digest; written after the outputs."""
    manifest = RunManifest(command=command, config_digest=digest,
                           master_seed=master_seed, started=started,
                           finished=_utcnow())
    for p in paths:
        with open(p, "rb") as fh:
            manifest.outputs.append({"path": os.path.basename(p),
                                     "sha256": hashlib.sha256(fh.read()).hexdigest()})
    _atomic_write(manifest_path, (json.dumps(manifest.to_json_dict(), indent=2)
                                  + "\n").encode())
    return manifest


def result_to_csv(result):
    """CSV text for a SweepResult, schema fixed by CSV_HEADER."""
    lines = [CSV_HEADER]
    for c in result.cells:
        lines.append(",".join([
            c.procedure, repr(c.p), repr(c.k), repr(c.s), repr(c.n),
            repr(c.beta), repr(c.rho), repr(c.n_runs), repr(c.n_success),
            repr(c.p_success), repr(c.ci_low), repr(c.ci_high)]))
    return "\n".join(lines) + "\n"


def parse_result_csv(path):
    """Curves {(procedure, p, beta): [(rho, p_success), ...]} from a sweep CSV."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: missing or unexpected CSV header")
    curves = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 12:
            raise ConfigError(f"{path}: malformed CSV row: {ln!r}")
        proc, p, beta, rho, psucc = parts[0], int(parts[1]), float(parts[5]), \
            float(parts[6]), float(parts[9])
        curves.setdefault((proc, p, beta), []).append((rho, psucc))
    for pts in curves.values():
        pts.sort()
    return curves


def write_results(result, csv_path, svg_path=None, command="sweep"):
    """Persist a SweepResult: CSV (bit-exact for equal results), optional SVG,
    and a manifest next to the CSV."""
    started = _utcnow()
    _atomic_write(csv_path, result_to_csv(result).encode())
    paths = [csv_path]
    if svg_path is not None:
        _atomic_write(svg_path, svg_from_result(result).encode())
        paths.append(svg_path)
    return write_manifest(command, config_digest(result.config),
                          result.config.master_seed, started, paths,
                          csv_path + ".manifest.json")


def _panel_svg(origin_x, origin_y, title, curves, ref_rhos):
    """One panel: p_success vs rho per procedure plus vertical reference lines."""
    x0, y0 = origin_x + _MARGIN, origin_y + 28
    w, h = _PANEL_W - _MARGIN - 16, _PANEL_H - 28 - 40
    rhos = sorted({r for pts in curves.values() for r, _ in pts})
    if not rhos:
        return [f'<text x="{x0}" y="{y0 + 20}" font-size="12">{title}: no cells</text>']
    r_min, r_max = rhos[0], rhos[-1]
    span = (r_max - r_min) or 1.0

    def sx(rho):
        return x0 + (rho - r_min) / span * w

    def sy(prob):
        return y0 + (1.0 - prob) * h

    parts = [
        f'<text x="{origin_x + _PANEL_W / 2:.1f}" y="{origin_y + 16}" font-size="13" '
        f'text-anchor="middle">{title}</text>',
        f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{w:.1f}" height="{h:.1f}" '
        'fill="none" stroke="#888" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{x0 - 6:.1f}" y="{sy(frac) + 4:.1f}" font-size="10" '
                     f'text-anchor="end">{frac:.1f}</text>')
    for rho in (r_min, r_max):
        parts.append(f'<text x="{sx(rho):.1f}" y="{y0 + h + 14:.1f}" font-size="10" '
                     f'text-anchor="middle">{rho:g}</text>')
    parts.append(f'<text x="{x0 + w / 2:.1f}" y="{y0 + h + 30:.1f}" font-size="11" '
                 'text-anchor="middle">rho</text>')
    for proc in sorted(curves):
        pts = " ".join(f"{sx(r):.2f},{sy(pv):.2f}" for r, pv in sorted(curves[proc]))
        color = _COLORS.get(proc, "#333")
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.5"/>')
    for proc in sorted(ref_rhos):
        rho = ref_rhos[proc]
        if r_min <= rho <= r_max:
            color = _COLORS.get(proc, "#333")
            parts.append(f'<line x1="{sx(rho):.2f}" y1="{y0:.1f}" x2="{sx(rho):.2f}" '
                         f'y2="{y0 + h:.1f}" stroke="{color}" stroke-width="1" '
                         'stroke-dasharray="4,3"/>')
    return parts


def _svg_document(panels, n_cols):
    n_rows = (len(panels) + n_cols - 1) // n_cols
    width = n_cols * _PANEL_W + 180
    height = max(1, n_rows) * _PANEL_H + 20
    body = []
    for idx, panel in enumerate(panels):
        ox = (idx % n_cols) * _PANEL_W
        oy = (idx // n_cols) * _PANEL_H + 10
        body.extend(panel(ox, oy))
    lx = n_cols * _PANEL_W + 16
    body.append(f'<text x="{lx}" y="30" font-size="12">procedures</text>')
    for i, (proc, color) in enumerate(sorted(_COLORS.items())):
        y = 50 + 18 * i
        body.append(f'<line x1="{lx}" y1="{y - 4}" x2="{lx + 24}" y2="{y - 4}" '
                    f'stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{lx + 30}" y="{y}" font-size="11">{proc}</text>')
    return ('<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{width}" height="{height}" font-family="sans-serif">\n'
            + "\n".join(body) + "\n</svg>\n")


def svg_from_result(result):
    """Deterministic SVG: one panel per (p, beta), curves per procedure and
    dashed verticals at the lower-bound-implied rho per procedure."""
    cfg = result.config
    panels = []
    for p in cfg.p_list:
        for beta in cfg.beta_list:
            curves = {}
            for c in result.cells:
                if c.p == p and c.beta == beta:
                    curves.setdefault(c.procedure, []).append((c.rho, c.p_success))
            refs = {}
            mu_lb = result.lower_bound_mu.get((p, beta))
            if mu_lb is not None:
                for proc in curves:
                    ref = result.mu_reference.get((proc, p, beta))
                    if ref is not None and ref.value > 0:
                        refs[proc] = mu_lb / ref.value
            title = f"p={p}, beta={beta:g}"
            panels.append(lambda ox, oy, t=title, cv=curves, rf=refs:
                          _panel_svg(ox, oy, t, cv, rf))
    return _svg_document(panels, n_cols=max(1, len(cfg.beta_list)))


def svg_from_curves(curves):
    """SVG from parsed CSV curves (no reference lines)."""
    keys = sorted({(p, beta) for (_, p, beta) in curves})
    panels = []
    for p, beta in keys:
        sub = {proc: pts for (proc, pp, bb), pts in curves.items()
               if pp == p and bb == beta}
        title = f"p={p}, beta={beta:g}"
        panels.append(lambda ox, oy, t=title, cv=sub: _panel_svg(ox, oy, t, cv, {}))
    n_cols = max(1, len({beta for _, beta in keys}))
    return _svg_document(panels, n_cols=n_cols)


def support_to_csv(support):
    """Single-column CSV of the declared non-zero row indices."""
    return "row\n" + "".join(f"{i}\n" for i in support)


def write_support_csv(support, path):
    _atomic_write(path, support_to_csv(support).encode())


def matrix_to_csv(matrix):
    """Row-indexed CSV for a p x k matrix (row index, per-task values)."""
    matrix = np.asarray(matrix)
    k = matrix.shape[1]
    lines = ["row," + ",".join(f"task{j}" for j in range(k))]
    for i in range(matrix.shape[0]):
        lines.append(str(i) + "," + ",".join(repr(float(v)) for v in matrix[i]))
    return "\n".join(lines) + "\n"


def write_matrix_csv(matrix, path):
    _atomic_write(path, matrix_to_csv(matrix).encode())


def read_matrix_csv(path):
    """Inverse of write_matrix_csv."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"cannot read matrix {path}: {exc}") from exc
    if not lines or not lines[0].startswith("row,"):
        raise ConfigError(f"{path}: expected a row-indexed matrix CSV")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append([float(v) for v in parts[1:]])
    return np.array(rows, dtype=np.float64)
