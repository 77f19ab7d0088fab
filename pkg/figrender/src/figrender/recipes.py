"""Figure recipes: which CSVs feed which panel style.

A recipe never recomputes physics; it only names input series, axis
dressing and the output image. Recipes are JSON:

{
  "figure_id": "fig3",
  "kind": "heatmap",               # timeseries | lines | heatmap
  "inputs": [{"role": "grid", "path": "results.csv", "label": "..."}],
  "x_label": "...", "y_label": "...",
  "x_scale": 1.0,                  # multiplies the axis values for display
  "title": "...",
  "out": "fig3.png"
}

Paths given on the command line override the recipe's input paths in
order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class RecipeError(ValueError):
    """Recipe or input-schema problem."""


KINDS = ("timeseries", "lines", "heatmap")


@dataclass(frozen=True)
class RecipeInput:
    role: str
    path: str = ""
    label: str = ""


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    kind: str
    inputs: tuple[RecipeInput, ...]
    out: str = ""
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    x_scale: float = 1.0
    y_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RecipeError(f"unknown figure kind '{self.kind}'")
        if not self.inputs:
            raise RecipeError("recipe needs at least one input")


def load_recipe(path) -> FigureRecipe:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{path}: {exc}") from exc
    try:
        inputs = tuple(RecipeInput(role=i["role"], path=i.get("path", ""),
                                   label=i.get("label", ""))
                       for i in raw["inputs"])
        return FigureRecipe(figure_id=raw["figure_id"], kind=raw["kind"],
                            inputs=inputs, out=raw.get("out", ""),
                            x_label=raw.get("x_label", ""),
                            y_label=raw.get("y_label", ""),
                            title=raw.get("title", ""),
                            x_scale=float(raw.get("x_scale", 1.0)),
                            y_scale=float(raw.get("y_scale", 1.0)))
    except KeyError as exc:
        raise RecipeError(f"recipe missing key {exc}") from exc
