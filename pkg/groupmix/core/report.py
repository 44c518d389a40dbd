"""
Machine-readable run reports printed on stdout by the CLI.
"""
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from groupmix.util.number_type import format_scalar


def _encode(value: Any):
    """json.dumps fallback: rationals as "p/q", numpy values as plain Python"""
    if isinstance(value, Fraction):
        return format_scalar(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'to_json'):
        return value.to_json()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class RunReport:
    """
    One command invocation: what was asked, what came out, how long each
    phase took, and the seed needed to rerun it. config holds the config
    files read, the merged settings and the values a command resolved
    from them.
    """

    def __init__(self, command: str, inputs: Dict[str, Any], seed: Optional[int] = None):
        self.command = command
        self.inputs = inputs
        self.seed = seed
        self.outputs: Dict[str, Any] = {}
        self.timings: Dict[str, float] = {}
        self.config: Dict[str, Any] = {}

    def to_json(self) -> dict:
        return {
            'command': self.command,
            'inputs': self.inputs,
            'outputs': self.outputs,
            'timings': self.timings,
            'seed': self.seed,
            'config': self.config,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, default=_encode)

    @classmethod
    def loads(cls, text: str) -> 'RunReport':
        data = json.loads(text)
        report = cls(data['command'], data['inputs'], data.get('seed'))
        report.outputs = data.get('outputs', {})
        report.timings = data.get('timings', {})
        report.config = data.get('config', {})
        return report
