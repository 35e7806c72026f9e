"""Trajectory CSV, plot-ready data files, design reports and scenario config files."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import controllers as ctl
from .errors import ConfigError
from .linalg import (
    LinearizationConstants,
    eigenvalues,
    hurwitz_check,
    poly_roots,
    sliding_char_coeffs,
    sliding_linearization,
    solve_surface_params,
)
from .ode import IntegratorConfig, Trajectory
from .plants import CraneParams

CSV_HEADER = ("t", "x1", "x2", "x3", "x4", "u", "s1", "s2", "s3_or_S", "status")


def fmt(v: float) -> str:
    """Positional decimal with 9 significant digits; empty for NaN/None."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return np.format_float_positional(v, precision=9, unique=False, fractional=False, trim="-")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def export_csv(traj: Trajectory, path) -> Path:
    """Write one row per recorded sample; surface columns stay blank for open-loop runs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    # t_end = 0 produces only the initial sample; that run has no steps
    if traj.n_accepted > 0:
        for i in range(len(traj)):
            u = traj.controls[i] if traj.controls is not None else None
            s = traj.surfaces[i] if traj.surfaces is not None else (None, None, None)
            w.writerow(
                [fmt(traj.times[i]), *(fmt(v) for v in traj.states[i]), fmt(u), *(fmt(v) for v in s), traj.status.value]
            )
    atomic_write(path, buf.getvalue())
    return Path(path)


def read_csv(path) -> dict:
    """Parse a file written by :func:`export_csv` into float arrays (blank -> NaN)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: not a trajectory CSV")
    body = rows[1:]
    out = {}
    for j, name in enumerate(CSV_HEADER[:-1]):
        out[name] = np.array([float(r[j]) if r[j] else np.nan for r in body])
    out["status"] = [r[-1] for r in body]
    return out


LAYOUTS = {
    "four": (
        ("x", "t(sec)", "x"),
        ("xdot", "t(sec)", "derivative of x"),
        ("theta", "t(sec)", r"$\theta$"),
        ("thetadot", "t(sec)", r"derivative of $\theta$"),
    ),
    "six": (
        ("x", "t(sec)", "x"),
        ("xdot", "t(sec)", "derivative of x"),
        ("theta", "t(sec)", r"$\theta$"),
        ("thetadot", "t(sec)", r"derivative of $\theta$"),
        ("s1_s2", "t(sec)", r"$s_1$(-), $s_2$(:)"),
        ("S", "t(sec)", "S"),
    ),
}

_PLOT_SCRIPT = '''"""Plot {title}. Run: python {script} [output.png]"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = __import__("pathlib").Path(__file__).resolve().parent
PANELS = {panels!r}

fig, axes = plt.subplots({rows}, 2, figsize=(9, {height}))
for ax, (fname, xlabel, ylabel) in zip(axes.ravel(), PANELS):
    data = np.loadtxt(HERE / fname, ndmin=2)
    for col, style in zip(data[:, 1:].T, ("-", ":")):
        ax.plot(data[:, 0], col, style)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else HERE / "{stem}.png", dpi=150)
'''


def emit_plot_data(traj: Trajectory, layout: str, outdir, stem: str = "figure") -> list:
    """Write one whitespace-delimited data file per subplot plus a matplotlib script.

    Nothing is rendered here; running the script produces the image.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    outdir = Path(outdir)
    t = traj.times
    X = traj.states
    surf = traj.surfaces
    columns = {
        "x": (X[:, 0],),
        "xdot": (X[:, 1],),
        "theta": (X[:, 2],),
        "thetadot": (X[:, 3],),
    }
    if layout == "six":
        if surf is None:
            raise ValueError("six-panel layout needs surface values")
        columns["s1_s2"] = (surf[:, 0], surf[:, 1])
        columns["S"] = (surf[:, 2],)
    files = []
    panels = []
    for key, xlabel, ylabel in LAYOUTS[layout]:
        name = f"{stem}_{key}.dat"
        data = np.column_stack((t, *columns[key]))
        buf = io.StringIO()
        np.savetxt(buf, data, fmt="%.9g", header=f"t {key}")
        atomic_write(outdir / name, buf.getvalue())
        files.append(outdir / name)
        panels.append((name, xlabel, ylabel))
    rows = len(panels) // 2
    script = outdir / f"{stem}_plot.py"
    atomic_write(
        script,
        _PLOT_SCRIPT.format(
            title=stem, script=script.name, panels=tuple(panels), rows=rows, height=2.6 * rows, stem=stem
        ),
    )
    return files + [script]


@dataclass
class DesignReport:
    d: tuple
    c1: float
    c2: float
    alpha1: float
    A2: np.ndarray
    eigenvalues: list
    stable: bool
    residual: float

    def as_dict(self) -> dict:
        return {
            "desired_coeffs": list(self.d),
            "c1": self.c1,
            "c2": self.c2,
            "alpha1": self.alpha1,
            "A2": self.A2.tolist(),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "hurwitz": self.stable,
            "round_trip_residual": self.residual,
        }

    def to_text(self) -> str:
        lines = [
            f"desired polynomial: s^3 + {self.d[0]:g} s^2 + {self.d[1]:g} s + {self.d[2]:g}",
            f"c1     = {self.c1:.6f}",
            f"c2     = {self.c2:.6f}",
            f"alpha1 = {self.alpha1:.6f}",
            "A2 =",
            *("  " + "  ".join(f"{v:12.6f}" for v in row) for row in self.A2),
            "eigenvalues: " + ", ".join(f"{z.real:.6f}{z.imag:+.6f}j" for z in self.eigenvalues),
            f"verdict: {'stable' if self.stable else 'unstable'}",
            f"round-trip residual: {self.residual:.3e}",
        ]
        return "\n".join(lines)


def design_report(d1, d2, d3, cp: CraneParams = CraneParams()) -> DesignReport:
    """Solve the corrected sliding surface and check it; raises ``SingularDesign`` with no partial output."""
    lc = LinearizationConstants.from_crane(cp)
    sol = solve_surface_params(lc, d1, d2, d3)
    A2 = sliding_linearization(lc, sol.c1, sol.c2, sol.alpha1)
    back = sliding_char_coeffs(lc, sol.c1, sol.c2, sol.alpha1)
    residual = max(abs(b - d) / max(1.0, abs(d)) for b, d in zip(back, (d1, d2, d3)))
    return DesignReport(
        d=(d1, d2, d3),
        c1=sol.c1,
        c2=sol.c2,
        alpha1=sol.alpha1,
        A2=A2,
        eigenvalues=eigenvalues(A2),
        stable=hurwitz_check((1.0, *back)),
        residual=residual,
    )


def polynomial_report(coeffs) -> dict:
    """Eigenvalues and Hurwitz verdict for an arbitrary monic cubic/quartic."""
    roots = poly_roots(coeffs)
    return {"roots": [[z.real, z.imag] for z in roots], "hurwitz": hurwitz_check(coeffs)}


def write_metrics(metrics: dict, path) -> None:
    atomic_write(path, json.dumps(metrics, indent=2, sort_keys=True) + "\n")


# -- scenario config files -----------------------------------------------------

_CRANE_KEYS = {"M", "m", "L", "g", "x_d"}
_IHSSMC_KEYS = {"C1", "C2", "C3", "eta", "k", "boundary_layer"}
_AHSSMC_KEYS = {"c1", "c2", "alpha1", "alpha2", "eta", "k", "boundary_layer"}
_INTEGRATOR_KEYS = {"rtol", "atol", "h_init", "h_min", "h_max", "t_end", "diverge_norm"}
_OTHER_KEYS = {"name", "plant", "controller", "K", "y0", "metrics", "u_profile", "coupling", "description"}


def _floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from exc


def parse_config(text: str):
    """Parse the flat ``key = value`` scenario format into a :class:`Scenario`."""
    from .experiments import Scenario, validate

    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    kv = dict(parser["scenario"])
    known = _CRANE_KEYS | _IHSSMC_KEYS | _AHSSMC_KEYS | _INTEGRATOR_KEYS | _OTHER_KEYS
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    if "name" not in kv:
        raise ConfigError("config needs a name")

    def num(key):
        try:
            return float(kv[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {kv[key]!r}") from exc

    try:
        crane = CraneParams(**{k: num(k) for k in _CRANE_KEYS & set(kv)})
        controller = kv.get("controller", "open_loop")
        gains = None
        if controller == "ihssmc":
            gains = ctl.IhssmcParams(x_d=crane.x_d, **{k: num(k) for k in _IHSSMC_KEYS & set(kv)})
        elif controller == "ahssmc":
            gains = ctl.AhssmcParams(x_d=crane.x_d, **{k: num(k) for k in _AHSSMC_KEYS & set(kv)})
        elif controller == "linear":
            if "K" not in kv:
                raise ConfigError("linear controller needs K")
            gains = _floats(kv["K"], "K")
        cfg = IntegratorConfig(**{k: num(k) for k in _INTEGRATOR_KEYS & set(kv)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    fields = dict(
        name=kv["name"],
        plant=kv.get("plant", "crane"),
        crane=crane,
        controller=controller,
        gains=gains,
        integrator=cfg,
        description=kv.get("description", ""),
    )
    if "y0" in kv:
        fields["y0"] = _floats(kv["y0"], "y0")
    if "metrics" in kv:
        fields["metrics"] = tuple(m.strip() for m in kv["metrics"].replace(",", " ").split())
    if "u_profile" in kv:
        fields["u_profile"] = kv["u_profile"]
    if "coupling" in kv:
        fields["coupling"] = num("coupling")
    s = Scenario(**fields)
    validate(s)
    return s


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def with_overrides(s, **cfg_overrides):
    """Return ``s`` with integrator settings replaced where the override is not None."""
    changes = {k: v for k, v in cfg_overrides.items() if v is not None}
    if not changes:
        return s
    try:
        return replace(s, integrator=replace(s.integrator, **changes))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
