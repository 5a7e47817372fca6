"""Logging configuration for the avrelscore toolkit."""

import logging
import sys
from pathlib import Path
from typing import Optional

import structlog


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    json_logs: bool = False,
    console_handler: Optional[logging.Handler] = None,
) -> logging.Logger:
    """
    Set up logging configuration for the toolkit.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file path for logging
        json_logs: Whether to output JSON formatted logs
        console_handler: Handler replacing the default stderr stream handler

    Returns:
        Configured logger instance
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    processors = [
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso" if json_logs else "%Y-%m-%d %H:%M:%S"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]
    if json_logs:
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()

    if console_handler is None:
        console_handler = logging.StreamHandler(sys.stderr)
        if not json_logs:
            console_handler.setFormatter(logging.Formatter(
                fmt="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S"
            ))
    console_handler.setLevel(numeric_level)
    root_logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(logging.Formatter(
            fmt="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        ))
        root_logger.addHandler(file_handler)

    # numpy/PIL chatter
    logging.getLogger("PIL").setLevel(logging.WARNING)

    logger = logging.getLogger("avrelscore")
    logger.setLevel(numeric_level)
    return logger


def get_logger(name: str = "avrelscore") -> structlog.stdlib.BoundLogger:
    """
    Get a structlog logger instance.

    Args:
        name: Logger name (usually module name)

    Returns:
        Bound logger instance
    """
    return structlog.get_logger(name)


def log_train_step(
    step: int,
    stage: int,
    lr: float,
    l_ctc: float,
    l_att: float,
    l_joint: float,
) -> None:
    """
    Log one optimizer step with consistent fields.

    Args:
        step: Global optimizer step
        stage: Curriculum stage index
        lr: Learning rate used for the step
        l_ctc: CTC loss
        l_att: Attention loss
        l_joint: Joint objective
    """
    logger = get_logger("avrelscore.training")
    logger.debug(
        f"Step {step}",
        step=step,
        stage=stage,
        lr=lr,
        l_ctc=round(l_ctc, 6),
        l_att=round(l_att, 6),
        l_joint=round(l_joint, 6),
    )


def log_eval_condition(model: str, visual: str, snr: str, wer: float, n_utts: int) -> None:
    """
    Log one evaluated grid cell.

    Args:
        model: Model label
        visual: Visual corruption condition
        snr: Audio condition (dB value or 'clean')
        wer: Word error rate in percent
        n_utts: Number of utterances scored
    """
    logger = get_logger("avrelscore.evaluation")
    logger.info(
        f"Evaluated {model} [{visual} / {snr}]",
        model=model,
        visual=visual,
        snr=snr,
        wer=round(wer, 4),
        n_utts=n_utts,
    )
