"""Toxicity timelines, toxic conversation chains and change-point analysis
for diarized podcast transcripts."""

__version__ = "0.1.0"
