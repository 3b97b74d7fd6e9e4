"""Volume-price-adjusted MACD backtesting engine."""

__version__ = "0.1.0"
