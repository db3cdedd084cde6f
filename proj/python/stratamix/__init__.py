"""Nonparametric mixture estimation of a stratified proportion."""

from ._core import (
    DomainError,
    Error,
    InfeasibleConstraint,
    ParseError,
    ZeroLikelihoodRow,
    ci,
    draw,
    extreme_collapse,
    fit,
    general,
    naive,
    preset_names,
    simulate,
    thin,
)

__all__ = [
    "DomainError",
    "Error",
    "InfeasibleConstraint",
    "ParseError",
    "ZeroLikelihoodRow",
    "ci",
    "draw",
    "extreme_collapse",
    "fit",
    "general",
    "naive",
    "preset_names",
    "simulate",
    "thin",
]
