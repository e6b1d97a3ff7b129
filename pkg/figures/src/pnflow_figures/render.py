"""Figure kinds mapped 1:1 to the pnflow CSV schemas.

Rendering never recomputes science quantities; every curve is read straight
from the CSV columns, with reference slopes overlaid as dashed guides.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "svg.hashsalt": "pnflow",
}

KINDS = ("trajectories", "selfsimilar_collapse", "tail_loglog", "psi_decay",
         "kernel_bounds")


class SchemaError(Exception):
    """CSV columns do not match the requested figure kind."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    s: float | None = None
    t: float | None = None
    axis_scales: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        with open(path) as fh:
            raw = json.load(fh)
        spec = cls(kind=raw["kind"], inputs=list(raw["inputs"]),
                   output=raw["output"], s=raw.get("s"), t=raw.get("t"),
                   axis_scales=raw.get("axis_scales", {}))
        if spec.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {spec.kind!r}")
        for p in spec.inputs:
            if not Path(p).exists():
                raise SchemaError(f"input does not exist: {p}")
        return spec


def _read_csv(path, required):
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: unreadable CSV ({exc})") from exc
    if data.size == 0 or data.dtype.names is None:
        raise SchemaError(f"{path}: empty or headerless CSV")
    names = data.dtype.names
    missing = [c for c in required if c not in names
               and not any(n.startswith(c) for n in names)]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}; found {list(names)}")
    return data


def _columns(data, prefix):
    return [n for n in data.dtype.names if n.startswith(prefix)]


def _finish(fig, spec):
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Software": "pnflow-figures"})
    plt.close(fig)
    return out


def render_trajectories(spec: FigureSpec):
    data = _read_csv(spec.inputs[0], ["t", "xi_1"])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name in _columns(data, "xi_"):
            ax.plot(data["t"], data[name], label=name)
        ax.set_xscale(spec.axis_scales.get("x", "log"))
        ax.set_xlabel("t")
        ax.set_ylabel("positions")
        ax.legend()
        return _finish(fig, spec)


def collapse_curves(data, s):
    p = 1.0 / (1.0 + 2.0 * s)
    t = data["t"]
    return t, {name: data[name] * t ** (-p) for name in _columns(data, "xi_")}


def collapse_statistics(csv_path, s):
    """Final-decade mean and standard deviation of each collapse curve."""
    data = _read_csv(csv_path, ["t", "xi_1"])
    t, curves = collapse_curves(data, s)
    final = t >= t[-1] / 10.0
    return {name: (float(np.mean(vals[final])), float(np.std(vals[final])))
            for name, vals in curves.items()}


def render_selfsimilar_collapse(spec: FigureSpec):
    if spec.s is None:
        raise SchemaError("selfsimilar_collapse needs the order parameter s")
    data = _read_csv(spec.inputs[0], ["t", "xi_1"])
    t, curves = collapse_curves(data, spec.s)
    final = t >= t[-1] / 10.0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, vals in curves.items():
            ax.plot(t, vals, label=f"{name} t^(-1/(1+2s))")
            ax.axhline(np.mean(vals[final]), ls="--", lw=0.8, color="k")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("collapsed positions")
        ax.legend()
        return _finish(fig, spec)


def render_tail_loglog(spec: FigureSpec):
    if spec.s is None:
        raise SchemaError("tail_loglog needs the order parameter s")
    data = _read_csv(spec.inputs[0], ["x", "w", "wp", "wpp"])
    s = spec.s
    x = data["x"]
    keep = x > 0
    x = x[keep]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(x, np.abs(1.0 - data["w"][keep]), label="1 - w")
        ax.loglog(x, np.abs(data["wp"][keep]), label="w'")
        ax.loglog(x, np.abs(data["wpp"][keep]), label="|w''|")
        xg = np.array([x[len(x) // 4], x[-1]])
        for slope, curve in ((2 * s, "1 - w"), (1 + 2 * s, "w'"),
                             (2 + 2 * s, "w''")):
            anchor = np.interp(xg[0], x, np.abs(data[
                {"1 - w": "w", "w'": "wp", "w''": "wpp"}[curve]][keep])
                if curve != "1 - w" else np.abs(1 - data["w"][keep]))
            ax.loglog(xg, anchor * (xg / xg[0]) ** (-slope), "k--", lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("tails")
        ax.legend()
        return _finish(fig, spec)


def render_psi_decay(spec: FigureSpec):
    if spec.s is None:
        raise SchemaError("psi_decay needs the order parameter s")
    data = _read_csv(spec.inputs[0], ["t", "anorm_psi", "h_1"])
    t = data["t"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(t, np.maximum(data["anorm_psi"], 1e-300),
                  label="anorm of the corrector")
        habs = np.max(np.abs(np.column_stack(
            [data[n] for n in _columns(data, "h_")])), axis=1)
        ax.loglog(t, np.maximum(habs, 1e-300), label="|h|")
        p = 1.0 / (1.0 + 2.0 * spec.s)
        xg = np.array([t[len(t) // 2], t[-1]])
        ax.loglog(xg, habs[len(t) // 2] * (xg / xg[0]) ** p, "k--", lw=0.8,
                  label="t^(1/(1+2s)) guide")
        ax.set_xlabel("t")
        ax.legend()
        return _finish(fig, spec)


def render_kernel_bounds(spec: FigureSpec):
    if spec.s is None:
        raise SchemaError("kernel_bounds needs the order parameter s")
    data = _read_csv(spec.inputs[0], ["x", "p"])
    s = spec.s
    t = spec.t if spec.t is not None else 1.0
    x = np.abs(data["x"])
    keep = x > 0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(x[keep], data["p"][keep], ".", ms=2, label="p(x, t)")
        xs = np.geomspace(max(x[keep].min(), 1e-2), x.max(), 200)
        env = t / (xs**2 + t ** (1.0 / s)) ** ((1.0 + 2.0 * s) / 2.0)
        ax.loglog(xs, env, "k--", lw=0.8, label="two-sided envelope")
        anchor = np.interp(xs[-1], np.sort(x[keep]),
                           data["p"][keep][np.argsort(x[keep])])
        ax.loglog(xs, anchor * (xs / xs[-1]) ** (-1.0 - 2.0 * s), "k:", lw=0.8,
                  label="x^(-1-2s) guide")
        ax.set_xlabel("|x|")
        ax.set_ylabel("p")
        ax.legend()
        return _finish(fig, spec)


RENDERERS = {
    "trajectories": render_trajectories,
    "selfsimilar_collapse": render_selfsimilar_collapse,
    "tail_loglog": render_tail_loglog,
    "psi_decay": render_psi_decay,
    "kernel_bounds": render_kernel_bounds,
}


def render(spec: FigureSpec):
    return RENDERERS[spec.kind](spec)
