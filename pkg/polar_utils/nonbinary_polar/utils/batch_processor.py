# utils/batch_processor.py

"""
Utility module for parallel batch processing.
Runs search candidates and Monte-Carlo trial blocks on a thread pool.
Results always come back in input order, so any reduction over them is
independent of the number of workers.
"""

import functools
import os
import sys
import time
from concurrent.futures import Future, ThreadPoolExecutor, wait
from typing import Any, Callable, List, Optional, Sequence, TypeVar

import logging
logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

MAX_DEFAULT_WORKERS = 32
BATCHES_PER_WORKER = 5
MAX_BATCH = 100


class BatchProcessor:
    """Order-preserving parallel map over a list of work items."""

    def __init__(self, max_workers: Optional[int] = None, batch_size: Optional[int] = None,
                 show_progress: bool = True, strict: bool = True):
        """
        Args:
            max_workers: Worker threads (default: CPU count, capped at 32)
            batch_size: Items submitted per wave (default: adaptive)
            show_progress: Write a progress line to stderr after every wave
            strict: Re-raise the first item failure; otherwise drop failed items
        """
        self.max_workers = max(1, max_workers or min(MAX_DEFAULT_WORKERS, os.cpu_count() or 1))
        self.batch_size = batch_size
        self.show_progress = show_progress
        self.strict = strict

    def wave_size(self, total: int) -> int:
        """Items per wave: about five waves per worker, between 1 and 100 items each."""
        if self.batch_size is not None:
            return max(1, self.batch_size)
        per_wave = total // (self.max_workers * BATCHES_PER_WORKER)
        return max(1, min(MAX_BATCH, total, max(per_wave, min(4, total // self.max_workers))))

    def process_items(self, items: Sequence[T], processor_func: Callable[..., R], **kwargs: Any) -> List[R]:
        """
        Apply `processor_func(item, **kwargs)` to every item.
        Returns results in input order; in non-strict mode failed items are left out.
        """
        if not callable(processor_func):
            raise TypeError("processor_func must be a callable")
        total = len(items)
        if not total:
            return []

        func = functools.partial(processor_func, **kwargs)
        wave = self.wave_size(total)
        started = time.time()
        results: List[Any] = []
        failures = 0
        logger.debug(f"Processing {total} items in waves of {wave} on {self.max_workers} workers")

        with ThreadPoolExecutor(max_workers=min(self.max_workers, total)) as executor:
            for start in range(0, total, wave):
                chunk = items[start:start + wave]
                futures = [executor.submit(func, item) for item in chunk]
                wait(futures)
                for offset, future in enumerate(futures):
                    if self._collect(future, chunk[offset], start + offset, results):
                        failures += 1
                if self.show_progress:
                    self._show_progress(min(start + wave, total), total, started)

        if self.show_progress:
            print(file=sys.stderr)
        logger.debug(f"Processed {total} items in {time.time() - started:.2f}s")
        if failures:
            logger.warning(f"{failures} of {total} items failed and were dropped from the results")
        return results

    def _collect(self, future: Future, item: Any, index: int, results: List[Any]) -> bool:
        """Append the future's result; returns True when the item failed and was dropped."""
        error = future.exception()
        if error is None:
            results.append(future.result())
            return False
        item_repr = repr(item)
        if len(item_repr) > 100:
            item_repr = item_repr[:100] + "..."
        logger.error(f"Error processing item {index}: {item_repr} -> {error}")
        if self.strict:
            raise error
        return True

    @staticmethod
    def _show_progress(done: int, total: int, started: float) -> None:
        rate = done / max(0.01, time.time() - started)
        eta = (total - done) / rate if rate > 0 else 0.0
        if eta > 3600:
            eta_str = f"{eta / 3600:.1f}h"
        elif eta > 60:
            eta_str = f"{eta / 60:.1f}m"
        else:
            eta_str = f"{eta:.1f}s"
        print(f"Progress: {done:>{len(str(total))}}/{total} ({100.0 * done / total:6.1f}%) | "
              f"{rate:6.1f} items/s | ETA: {eta_str:<6}", end="\r", file=sys.stderr, flush=True)

