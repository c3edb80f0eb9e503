"""Upper bounds for the Bartnik mass of CMC spheres via explicit collars."""

from .pipeline import RunConfig, load_config, parse_metric, run_bound, run_sweep, run_verify

__all__ = ["RunConfig", "load_config", "parse_metric", "run_bound", "run_sweep", "run_verify"]

__version__ = "0.1.0"
