"""Bounded worker pool for independent training tasks."""

from concurrent.futures import ThreadPoolExecutor

from app.core.logs import get_logger

log = get_logger("pool")


class TrainingPool:
    """Runs independent training tasks and returns results in submission order.

    Each task owns its model exclusively, so results never depend on how
    many workers ran them.
    """

    def __init__(self, workers=1):
        self.workers = max(1, int(workers))

    def map(self, func, items):
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [func(item) for item in items]
        log.debug("dispatching tasks", tasks=len(items), workers=self.workers)
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(func, items))
