"""Sentiment analysis of Reddit comments on COVID-19 vaccines in India."""

__version__ = "0.1.0"
