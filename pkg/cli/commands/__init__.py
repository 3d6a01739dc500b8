"""
CUTrend CLI Commands
Workflow commands returning result dictionaries.
"""

from typing import Any, Dict

from cutrend.errors import CUTrendError


def failure(error: BaseException) -> Dict[str, Any]:
    """Result dictionary of a failed command."""
    if isinstance(error, CUTrendError):
        return {
            "success": False,
            "error": error.category,
            "message": str(error),
            "exit_code": error.exit_code,
        }
    return {
        "success": False,
        "error": "internal_error",
        "message": f"{type(error).__name__}: {error}",
        "exit_code": 1,
    }
