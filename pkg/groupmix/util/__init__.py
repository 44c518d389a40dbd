"""
Utility classes for groupmix.

- Logger: Colored stderr logging utilities
- ArgParse: Command framework behind the groupmix CLI
- CountType: Human-friendly counts such as 100k or 1e5
- rational: Exact Gauss-Jordan elimination over Fractions
"""

from .logger import Logger, Color, logger
from .argparse import ArgParse
from .number_type import CountType, count_value, format_scalar, parse_scalar

__all__ = [
    'Logger',
    'Color',
    'logger',
    'ArgParse',
    'CountType',
    'count_value',
    'format_scalar',
    'parse_scalar',
]
