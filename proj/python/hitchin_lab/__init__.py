"""Numerical laboratory for Hitchin's self-duality equations on local models."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import __version__, _run_config


def run(config_text):
    """Run a `key = value` configuration and return the report as a dict."""
    return _json.loads(_run_config(config_text))
