"""
CUTrend Logging
structlog configuration on top of the stdlib logging tree.
"""

import json
import logging
import logging.config
from pathlib import Path
from typing import Any, Dict, Optional

import structlog

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "configs" / "logging_config.json"

_SHARED_PROCESSORS = [
    structlog.contextvars.merge_contextvars,
    structlog.stdlib.add_logger_name,
    structlog.stdlib.add_log_level,
    structlog.processors.TimeStamper(fmt="iso"),
]


def _load_dict_config(path: Path) -> Dict[str, Any]:
    if path.exists():
        with open(path, "r") as f:
            return json.load(f)
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console": {
                "()": "structlog.stdlib.ProcessorFormatter",
                "processor": "ext://structlog.dev.ConsoleRenderer",
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "console",
                "stream": "ext://sys.stderr",
            }
        },
        "root": {"level": "INFO", "handlers": ["console"]},
    }


def _build_formatters(fmt: str) -> Dict[str, Any]:
    renderer = (
        structlog.processors.JSONRenderer()
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    return {
        "()": structlog.stdlib.ProcessorFormatter,
        "processors": [
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            renderer,
        ],
        "foreign_pre_chain": _SHARED_PROCESSORS,
    }


def configure_logging(
    level: str = "INFO",
    fmt: str = "console",
    log_file: Optional[str] = None,
    config_path: Optional[Path] = None,
) -> None:
    """
    Configure structlog and the stdlib logging tree.

    Args:
        level: Root log level name
        fmt: "console" for human-readable lines or "json" for JSON lines
        log_file: Optional rotating log file
        config_path: dictConfig JSON file (defaults to configs/logging_config.json)
    """
    dict_config = _load_dict_config(config_path or DEFAULT_CONFIG_PATH)
    dict_config["formatters"] = {
        "console": _build_formatters(fmt),
        "json": _build_formatters("json"),
    }
    dict_config.setdefault("root", {})["level"] = level.upper()
    for name in ("cutrend", "pipelines"):
        if name in dict_config.get("loggers", {}):
            dict_config["loggers"][name]["level"] = level.upper()

    handlers = dict_config.setdefault("handlers", {})
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.setdefault("file", {
            "class": "logging.handlers.RotatingFileHandler",
            "formatter": "json",
            "maxBytes": 10485760,
            "backupCount": 5,
            "encoding": "utf8",
        })
        handlers["file"]["filename"] = log_file
        dict_config["root"]["handlers"] = ["console", "file"]
    else:
        handlers.pop("file", None)
        dict_config["root"]["handlers"] = ["console"]
        for logger_config in dict_config.get("loggers", {}).values():
            logger_config["handlers"] = [
                h for h in logger_config.get("handlers", []) if h != "file"
            ]

    logging.config.dictConfig(dict_config)

    structlog.configure(
        processors=_SHARED_PROCESSORS + [
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str) -> Any:
    """Return a structlog logger bound to a module name."""
    return structlog.get_logger(name)
