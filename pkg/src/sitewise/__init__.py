"""Knowledge-evolving browser-agent runtime.

A training-free agent loop over a pluggable web environment: an adaptive tip
store retrieved through a cascade, a budgeted progressive summarizer, an
action-grounding operator, a hybrid failure trigger, and an HTTP workbench
for turning reviewed failures into new tips.
"""

from pathlib import Path

__version__ = "0.1.0"

# Bundled data files (seed tips, prompt templates, the shipped task suite).
DATA_DIR = Path(__file__).resolve().parent / "data"

