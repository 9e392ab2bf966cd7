# src/netalgebra/modules/signals.py

from __future__ import annotations
import logging
import signal
from typing import Callable, Dict, List

LOG = logging.getLogger(__name__)

EXIT_INTERRUPTED = 2


class GracefulShutdown:
    """Run registered cleanups (partial output files) on SIGINT/SIGTERM, then exit 2."""

    def __init__(self) -> None:
        self._callbacks: List[Callable[[], None]] = []
        self._previous: Dict[int, object] = {}

    def register(self, cb: Callable[[], None]) -> None:
        self._callbacks.append(cb)

    def run_cleanups(self) -> None:
        for cb in self._callbacks:
            try:
                cb()
            except Exception:
                LOG.debug("Cleanup callback raised exception (ignored).")

    def _handler(self, signum, frame) -> None:
        LOG.warning("Received signal %s, removing partial outputs...", signum)
        self.run_cleanups()
        raise SystemExit(EXIT_INTERRUPTED)

    def install(self) -> None:
        for s in (signal.SIGINT, signal.SIGTERM):
            try:
                self._previous[s] = signal.signal(s, self._handler)
            except Exception:
                LOG.debug("Could not install handler for signal %s", s)

    def uninstall(self) -> None:
        for s, previous in self._previous.items():
            try:
                signal.signal(s, previous)
            except Exception:
                LOG.debug("Could not restore handler for signal %s", s)
        self._previous.clear()

    def __enter__(self) -> "GracefulShutdown":
        self.install()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.uninstall()
