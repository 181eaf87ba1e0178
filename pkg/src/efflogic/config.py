"""Run configuration shared by the evaluator, the equivalence pipeline, and the CLI."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RunConfig:
    star_depth: int = 50  # unrolled stages per iteration before truncating
    depth: int = 3  # modal depth bound for formula enumeration
    grid: int = 8  # threshold denominator for enumeration
    game_size: int = 3  # AST size bound for enumerated games
    enum_cap: int = 20000  # hard cap on enumerated formula evaluations
    max_blocks: int = 12  # block-union signatures enumerate 2^blocks sets
    output_format: str = "text"

    def __post_init__(self) -> None:
        if self.star_depth < 1:
            raise ValueError("star_depth must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.grid < 1:
            raise ValueError("grid must be >= 1")
        if self.output_format not in ("text", "json"):
            raise ValueError("output_format must be 'text' or 'json'")


DEFAULT_CONFIG = RunConfig()
