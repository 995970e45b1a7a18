"""Experiment orchestration: configuration, reproducible runs, CLI."""

from . import config, experiments, manifest, plotdata

__all__ = ["config", "experiments", "manifest", "plotdata"]
