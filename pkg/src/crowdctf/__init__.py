"""crowdctf: a collaborative capture-the-flag platform for crowd
investigation of social-media misinformation.

Teams submit interdependent flags (discovery, archival, verification,
reporting) on evidence pieces organized under narrative threads. Judges
score submissions against a configurable rubric, cross-team work earns
collaboration bonuses, and every awarded point lands on an append-only
ledger from which the leaderboard is derived.
"""

from .engine import Engine
from .errors import PlatformError
from .store import Store

__version__ = "1.0.0"

__all__ = ["Engine", "PlatformError", "Store", "__version__"]
