"""Deterministic figure rendering for lambdamem CSV outputs."""

__version__ = "0.1.0"

from .recipes import FigureRecipe, RecipeError, RecipeInput, load_recipe
from .render import render

__all__ = ["FigureRecipe", "RecipeError", "RecipeInput", "load_recipe",
           "render"]
