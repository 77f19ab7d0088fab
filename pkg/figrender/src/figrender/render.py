"""Deterministic rendering of lambdamem CSV outputs.

All styling is pinned (size, dpi, colormap, fonts from matplotlib's
bundled set) and PNG metadata is stripped, so re-rendering identical
inputs yields byte-identical images.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .recipes import FigureRecipe, RecipeError

FIGSIZE = (6.4, 4.2)
DPI = 150
CMAP = "viridis"
CONTOUR_LEVEL = 1.0     # amplification boundary drawn on every heatmap


def _read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecipeError(f"{path}: empty input CSV") from None
        rows = [r for r in reader if r]
    if not rows:
        raise RecipeError(f"{path}: empty input CSV")
    cols = {}
    for i, name in enumerate(header):
        vals = []
        for r in rows:
            try:
                vals.append(float(r[i]))
            except ValueError:
                vals.append(np.nan)
        cols[name] = np.array(vals)
    return cols


def _need(cols: dict, names: list[str], path) -> None:
    for name in names:
        if name not in cols:
            raise RecipeError(f"{path}: missing column '{name}'")


def _new_axes():
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    return fig, ax


def _save(fig, out_path) -> None:
    fig.savefig(out_path, format="png", metadata={"Software": None})
    plt.close(fig)


def _render_timeseries(recipe: FigureRecipe, paths: list[str], out: str):
    fig, ax = _new_axes()
    styles = [("tab:blue", "-"), ("tab:orange", "-"), ("tab:red", "--"),
              ("tab:green", ":")]
    for i, (inp, path) in enumerate(zip(recipe.inputs, paths)):
        cols = _read_csv(path)
        _need(cols, ["t_s", "abs2_a_out"], path)
        t = cols["t_s"] * recipe.x_scale
        color, ls = styles[i % len(styles)]
        if inp.role == "input":
            _need(cols, ["abs2_a_in"], path)
            ax.plot(t, cols["abs2_a_in"] * recipe.y_scale, ls, color="0.5",
                    label=inp.label or "input")
            ax.plot(t, cols["abs2_a_out"] * recipe.y_scale, "-", color=color,
                    label="output")
        else:
            ax.plot(t, cols["abs2_a_out"] * recipe.y_scale, ls, color=color,
                    label=inp.label or inp.role)
    ax.set_xlabel(recipe.x_label or "time (ns)")
    ax.set_ylabel(recipe.y_label or "field intensity")
    ax.legend(loc="upper right", frameon=False)
    if recipe.title:
        ax.set_title(recipe.title)
    _save(fig, out)


def _render_lines(recipe: FigureRecipe, paths: list[str], out: str):
    fig, ax = _new_axes()
    for inp, path in zip(recipe.inputs, paths):
        cols = _read_csv(path)
        _need(cols, ["axis1", "efficiency", "fidelity"], path)
        x = cols["axis1"] * recipe.x_scale
        label = inp.label or inp.role
        ax.plot(x, cols["efficiency"], "-", label=f"{label} efficiency"
                if label else "efficiency")
        if np.any(np.isfinite(cols["fidelity"])):
            ax.plot(x, cols["fidelity"], "--",
                    label=f"{label} fidelity" if label else "fidelity")
    ax.axhline(CONTOUR_LEVEL, color="0.6", lw=0.8)
    ax.set_xlabel(recipe.x_label or "coupling scale")
    ax.set_ylabel(recipe.y_label or "apparent efficiency / fidelity")
    ax.legend(loc="best", frameon=False)
    if recipe.title:
        ax.set_title(recipe.title)
    _save(fig, out)


def _render_heatmap(recipe: FigureRecipe, paths: list[str], out: str):
    cols = _read_csv(paths[0])
    _need(cols, ["axis1", "axis2", "efficiency"], paths[0])
    x1 = np.unique(cols["axis1"])
    x2 = np.unique(cols["axis2"])
    n1, n2 = len(x1), len(x2)
    if n1 * n2 != len(cols["efficiency"]):
        raise RecipeError(f"{paths[0]}: rows do not form a full grid "
                          f"({n1} x {n2} != {len(cols['efficiency'])})")
    # rows are lexicographic in (axis1, axis2)
    E = cols["efficiency"].reshape(n1, n2)
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(x1 * recipe.x_scale, x2 * recipe.y_scale, E.T,
                         shading="nearest", cmap=CMAP)
    fig.colorbar(mesh, ax=ax, label="apparent efficiency")
    if np.nanmin(E) < CONTOUR_LEVEL < np.nanmax(E):
        cs = ax.contour(x1 * recipe.x_scale, x2 * recipe.y_scale, E.T,
                        levels=[CONTOUR_LEVEL], colors="white",
                        linewidths=1.2)
        ax.clabel(cs, fmt={CONTOUR_LEVEL: "E = 1"}, fontsize=8)
    ax.set_xlabel(recipe.x_label or "axis 1")
    ax.set_ylabel(recipe.y_label or "axis 2")
    if recipe.title:
        ax.set_title(recipe.title)
    _save(fig, out)


_RENDERERS = {
    "timeseries": _render_timeseries,
    "lines": _render_lines,
    "heatmap": _render_heatmap,
}


def render(recipe: FigureRecipe, input_paths: list[str] | None = None,
           out: str | None = None) -> str:
    """Render one recipe to a PNG; returns the output path."""
    paths = list(input_paths) if input_paths else []
    if len(paths) < len(recipe.inputs):
        paths += [inp.path for inp in recipe.inputs[len(paths):]]
    if any(not p for p in paths[:len(recipe.inputs)]):
        raise RecipeError("every recipe input needs a CSV path")
    out_path = out or recipe.out
    if not out_path:
        raise RecipeError("no output path given")
    _RENDERERS[recipe.kind](recipe, paths, out_path)
    return out_path
