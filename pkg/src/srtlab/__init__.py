"""Systemic-risk analytics (DebtRank, expected systemic loss, SRT quotes) and a
macro-financial agent-based model run under no-tax, SRT and FTT regimes."""

__version__ = "0.1.0"
