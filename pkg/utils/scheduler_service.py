"""
Scheduler Service Module

This module schedules Monte Carlo work over a worker pool:
- Fixed partition of path indices into chunks
- Process pool dispatch of chunk jobs
- Ordered reduction of chunk results

Chunk boundaries depend only on CHUNK_SIZE, never on the worker count, and
results come back in chunk order, so a run is schedule-independent.
"""

import logging
import time
from multiprocessing import Pool

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


class SchedulerService:
    """Scheduler service class for dispatching chunk jobs"""

    def __init__(self, app=None):
        """Initialize the scheduler service"""
        self.app = app
        self.workers = 1
        self.chunk_size = 2048
        self.jobs_dispatched = 0
        self.last_run_seconds = None
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.workers = max(1, int(app.config.get('WORKERS', 1)))
        self.chunk_size = max(1, int(app.config.get('CHUNK_SIZE', 2048)))
        logger.info(f"Scheduler ready with {self.workers} worker(s), chunk size {self.chunk_size}")

    def chunks(self, n):
        """
        Partition path indices 0..n-1 into contiguous chunks

        Args:
            n (int): Number of paths

        Returns:
            list: (start, stop) pairs in index order
        """
        return [(start, min(n, start + self.chunk_size)) for start in range(0, n, self.chunk_size)]

    def map_chunks(self, job, payloads, workers=None):
        """
        Run a module-level job over payloads and return results in order

        Args:
            job (callable): Picklable function of one payload
            payloads (list): One payload per chunk
            workers (int): Override for the configured pool size

        Returns:
            list: Job results in payload order
        """
        workers = max(1, int(workers or self.workers))
        started = time.perf_counter()
        if workers == 1 or len(payloads) <= 1:
            results = [job(payload) for payload in payloads]
        else:
            with Pool(processes=min(workers, len(payloads))) as pool:
                results = pool.map(job, payloads)
        self.jobs_dispatched += len(payloads)
        self.last_run_seconds = time.perf_counter() - started
        logger.info(f"Ran {len(payloads)} chunk job(s) on {workers} worker(s) in {self.last_run_seconds:.2f}s")
        return results

    def get_scheduler_status(self):
        """Get scheduler status"""
        return {
            'workers': self.workers,
            'chunk_size': self.chunk_size,
            'jobs_dispatched': self.jobs_dispatched,
            'last_run_seconds': self.last_run_seconds
        }


# Global scheduler service instance
scheduler_service = SchedulerService()
