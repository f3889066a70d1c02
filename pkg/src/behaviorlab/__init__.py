"""behaviorlab: behavior sequence construction and pattern mining toolkit."""

from .model import (
    BehaviorSequence,
    BehaviorVector,
    ItemKind,
    MicrostructureVector,
    Pattern,
    SimplifiedVector,
    TargetLabel,
    Window,
    concat,
    contains,
    embed,
    project_simplified,
)
from .seqmine import MiningConfig, SupportedPattern, mine_frequent, mine_impact_oriented, support

__version__ = "0.1.0"

__all__ = [
    "BehaviorSequence",
    "BehaviorVector",
    "ItemKind",
    "MicrostructureVector",
    "MiningConfig",
    "Pattern",
    "SimplifiedVector",
    "SupportedPattern",
    "TargetLabel",
    "Window",
    "concat",
    "contains",
    "embed",
    "mine_frequent",
    "mine_impact_oriented",
    "project_simplified",
    "support",
    "__version__",
]
