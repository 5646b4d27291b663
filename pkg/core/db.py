import hashlib
import logging
from typing import Dict, Optional

import sqlite_utils

logger = logging.getLogger(__name__)


def cell_hash(instance_digest: str, algo: str, delay: str, capacity: int) -> str:
    key = f"{instance_digest}|{algo}|{delay}|{capacity}"
    return hashlib.md5(key.encode()).hexdigest()


class ResultStore:
    def __init__(self, db_path: str = "vidsched.db", enabled: bool = True):
        """
        Cache of computed sweep cells.

        Args:
            db_path: Path to SQLite database file
            enabled: If False, cells are only remembered for the current run
        """
        self.enabled = enabled
        self.db_path = db_path

        if self.enabled:
            self.db = sqlite_utils.Database(db_path)
            self.init_db()
            self._memory: Optional[Dict[str, dict]] = None
            logger.info(f"Result store enabled: {db_path}")
        else:
            self.db = None
            self._memory = {}
            logger.info("Result store disabled - caching sweep cells in memory for this run only")

    def init_db(self):
        if not self.enabled:
            return

        self.db["sweep_results"].create(
            {
                "content_hash": str,
                "algo": str,
                "delay": str,
                "capacity": int,
                "reward": str,  # exact rational
                "avg_quality": float,
                "frames_successful": int,
            },
            pk="content_hash",
            if_not_exists=True,
        )

    def get(self, content_hash: str) -> Optional[dict]:
        if not self.enabled:
            return self._memory.get(content_hash)

        try:
            return dict(self.db["sweep_results"].get(content_hash))
        except sqlite_utils.db.NotFoundError:
            return None

    def save(self, content_hash: str, row: dict):
        if not self.enabled:
            self._memory[content_hash] = dict(row, content_hash=content_hash)
            return

        try:
            self.db["sweep_results"].insert(dict(row, content_hash=content_hash), replace=True)
        except Exception as e:
            logger.error(f"Error saving sweep cell {row.get('algo')}@{row.get('capacity')}: {e}")
            raise
