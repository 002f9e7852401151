import logging

logger = logging.getLogger('tracking_control')
logger.addHandler(logging.NullHandler())

LOG_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'


def configure_logging(level: int = logging.INFO) -> None:
    """Attaches a stream handler to the package logger (used by the CLI)."""
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.handlers = [h for h in logger.handlers if not isinstance(h, logging.StreamHandler)]
    logger.addHandler(handler)
    logger.setLevel(level)
