import os
import platform
import sys


def supports_ansi(stream=None):
    """
    True when `stream` (stdout by default) is a terminal that renders ANSI
    escape codes. NO_COLOR in the environment always disables them.
    """
    stream = stream or sys.stdout
    if "NO_COLOR" in os.environ:
        return False
    supported_platform = platform.system() != "Windows" or "ANSICON" in os.environ
    return supported_platform and hasattr(stream, "isatty") and stream.isatty()


_ON = supports_ansi()

ANSI_GREEN = "\033[32m" if _ON else ""
ANSI_BRIGHT_GREEN = "\033[92m" if _ON else ""
ANSI_RESET = "\033[0m" if _ON else ""
ANSI_BLUE = "\033[94m" if _ON else ""
ANSI_YELLOW = "\033[33m" if _ON else ""
ANSI_RED = "\033[31m" if _ON else ""
ANSI_BRIGHT_MAGENTA = "\033[95m" if _ON else ""

# Console tag -> colour.
STAGE_COLORS = {
    "QIVIF": ANSI_BRIGHT_MAGENTA,
    "QLS": ANSI_BLUE,
    "QLRD": ANSI_BLUE,
    "QAUM": ANSI_BLUE,
    "QHBF": ANSI_BLUE,
    "METRICS": ANSI_GREEN,
    "BATCH": ANSI_YELLOW,
    "CONFIG": ANSI_YELLOW,
}


def tagged(tag: str, message: str) -> str:
    """Format a console line as `[TAG] message`."""
    color = STAGE_COLORS.get(tag.split("][")[0], ANSI_BLUE)
    return f"{color}[{tag}]{ANSI_RESET} {message}"


def verdict(passed: bool) -> str:
    if passed:
        return f"{ANSI_GREEN}[PASSED]{ANSI_RESET}"
    return f"{ANSI_RED}[FAILED]{ANSI_RESET}"
