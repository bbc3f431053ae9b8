"""Set up logging, warning, etc."""

import contextvars
import logging
import warnings


run_tag: contextvars.ContextVar[str] = contextvars.ContextVar("run_tag", default="-")

LOG_FORMAT = "%(asctime)s %(levelname)s [%(run_tag)s] %(name)s: %(message)s"


class RunTagFilter(logging.Filter):
    """
    A logging filter that stamps records with the active run tag.

    Sweep workers run in threads; ``asyncio.to_thread`` copies the context,
    so each worker's ``run_tag`` value follows its log records.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        """Attach ``record.run_tag``; never drops a record."""
        record.run_tag = run_tag.get()
        return True


def set_up_logging(level: str | int = "INFO") -> None:
    """Set up Logging and Warning levels."""
    root_logger = logging.getLogger()
    filter_ = RunTagFilter()

    if not root_logger.handlers:
        logging.basicConfig(format=LOG_FORMAT)

    for handler in root_logger.handlers:
        if not any(isinstance(_f, RunTagFilter) for _f in handler.filters):
            handler.addFilter(filter_)

    root_logger.setLevel(level)
    warnings.filterwarnings("ignore", category=ResourceWarning)
