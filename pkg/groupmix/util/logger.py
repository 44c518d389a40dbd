"""
Logging utilities with color support for groupmix.

Everything goes to stderr: stdout carries the JSON report of a command.
"""
import sys
import time
from contextlib import contextmanager
from enum import Enum


class Color(Enum):
    """Color codes for terminal output"""
    RED = '\033[31m'
    GREEN = '\033[32m'
    YELLOW = '\033[33m'
    CYAN = '\033[36m'
    LIGHT_BLACK = '\033[90m'
    LIGHT_GREEN = '\033[92m'

    RESET = '\033[0m'
    BOLD = '\033[1m'


LEVELS = {'debug': 10, 'info': 20, 'warning': 30, 'error': 40}


class Logger:
    """
    Logger class with color support and a level threshold.
    """

    def __init__(self, enable_colors: bool = True, level: str = 'info'):
        """
        Initialize logger.

        :param enable_colors: Whether to enable color output (auto-detects TTY)
        :param level: Minimum level that gets printed
        """
        self.enable_colors = enable_colors
        self.level = LEVELS['info']
        self.set_level(level)

    def set_level(self, level: str):
        """
        Set the minimum printed level.

        :param level: One of debug, info, warning, error
        """
        if level not in LEVELS:
            raise ValueError(f"Unknown log level '{level}', expected one of {sorted(LEVELS)}")
        self.level = LEVELS[level]

    def _colors_on(self, file) -> bool:
        return self.enable_colors and hasattr(file, 'isatty') and file.isatty()

    def print(self, color: Color, message: str, file=None, end: str = '\n'):
        """
        Print a colored message.

        :param color: Color to use for the message
        :param message: Message to print
        :param file: File to write to (default: stderr)
        :param end: String appended after the message
        """
        if file is None:
            file = sys.stderr

        if self._colors_on(file):
            formatted_message = f"{color.value}{message}{Color.RESET.value}"
        else:
            formatted_message = message

        print(formatted_message, file=file, end=end, flush=True)

    def info(self, message: str, file=None, end: str = '\n'):
        """Print an info message in default color"""
        if self.level <= LEVELS['info']:
            print(message, file=file or sys.stderr, end=end, flush=True)

    def success(self, message: str, file=None, end: str = '\n'):
        """Print a success message in green"""
        if self.level <= LEVELS['info']:
            self.print(Color.GREEN, message, file=file, end=end)

    def warning(self, message: str, file=None, end: str = '\n'):
        """Print a warning message in yellow"""
        if self.level <= LEVELS['warning']:
            self.print(Color.YELLOW, message, file=file, end=end)

    def error(self, message: str, file=None, end: str = '\n'):
        """Print an error message in red"""
        self.print(Color.RED, message, file=file, end=end)

    def debug(self, message: str, file=None, end: str = '\n'):
        """Print a debug message in light black (gray)"""
        if self.level <= LEVELS['debug']:
            self.print(Color.LIGHT_BLACK, message, file=file, end=end)

    @contextmanager
    def phase(self, name: str, timings: dict = None):
        """
        Time a block of work and log it in light green.

        :param name: Phase name, also the key stored in timings
        :param timings: Optional dict receiving elapsed milliseconds
        """
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            if timings is not None:
                timings[name] = elapsed_ms
            if self.level <= LEVELS['debug']:
                self.print(Color.LIGHT_GREEN, f"[{name}] {elapsed_ms:.1f} ms")


# Global logger instance
logger = Logger()
