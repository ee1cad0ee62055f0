import logging
import math
import queue
import threading
from typing import Callable, List, Sequence, Tuple

_logger = logging.getLogger(__name__)

Chunk = Tuple[int, int]  # half-open n-range [start, stop)
Row = tuple  # (n, ...) with the residual as last element


class SearchState:
    """Shared between workers: collected rows, first hit and errors."""

    def __init__(self, epsilon: float, stop_at_epsilon: bool):
        self.condition = threading.Condition()
        self.box = []
        self.errors = []
        self.first_hit = math.inf
        self.epsilon = epsilon
        self.stop_at_epsilon = stop_at_epsilon

    def skip(self, start: int) -> bool:
        with self.condition:
            return bool(self.errors) or start > self.first_hit

    def deliver(self, start: int, rows: List[Row]) -> None:
        with self.condition:
            self.box.append((start, rows))
            if self.stop_at_epsilon:
                for row in rows:
                    if row[-1] <= self.epsilon:
                        self.first_hit = min(self.first_hit, row[0])
                        break
            self.condition.notify()

    def fail(self, exc: BaseException) -> None:
        with self.condition:
            self.errors.append(exc)
            self.condition.notify()


class WitnessWorker(threading.Thread):
    """Witness search worker.

    Takes n-ranges from the queue `q` and evaluates them with `scan`, which
    maps `(start, stop)` to one row per n. Results go to the shared `state`;
    ranges that begin after the first hit are skipped, so the merged rows up
    to that hit do not depend on scheduling.
    """

    def __init__(self, scan: Callable[[int, int], List[Row]], q: queue.Queue, state: SearchState):
        super().__init__(daemon=True)
        self._scan = scan
        self._q = q
        self._state = state

    def run(self):
        while True:
            try:
                start, stop = self._q.get_nowait()
            except queue.Empty:
                return
            if self._state.skip(start):
                continue
            try:
                rows = self._scan(start, stop)
            except Exception as e:
                _logger.exception(e)
                self._state.fail(e)
                return
            self._state.deliver(start, rows)


def run_chunks(scan: Callable[[int, int], List[Row]], chunks: Sequence[Chunk], threads: int,
               epsilon: float, stop_at_epsilon: bool) -> List[Row]:
    """Evaluate `chunks` with up to `threads` workers and merge rows by n."""
    state = SearchState(epsilon, stop_at_epsilon)

    if threads <= 1 or len(chunks) <= 1:
        for start, stop in chunks:
            if state.skip(start):
                break
            state.deliver(start, scan(start, stop))
    else:
        q = queue.Queue()
        for chunk in chunks:
            q.put(chunk)
        workers = [WitnessWorker(scan, q, state) for _ in range(min(threads, len(chunks)))]
        _logger.debug('Witness search on %d chunks with %d threads', len(chunks), len(workers))
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()
        if state.errors:
            raise state.errors[0]

    rows = [row for _, chunk_rows in sorted(state.box, key=lambda item: item[0]) for row in chunk_rows]
    return [row for row in rows if row[0] <= state.first_hit]
