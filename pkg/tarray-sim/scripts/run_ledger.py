import json
import os
import sqlite3
from pathlib import Path

import pandas as pd

DEFAULT_DB_NAME = "tarray_runs.db"


def default_db_path(output_root="."):
    return os.getenv("TARRAY_LEDGER_DB") or str(Path(output_root) / DEFAULT_DB_NAME)


class RunLedger:
    def __init__(self, db_path=None):
        """Ledger of every CLI command in a SQLite database"""
        self.db_path = str(db_path or default_db_path())
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self._init_db()

    def _init_db(self):
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp DATETIME DEFAULT CURRENT_TIMESTAMP,
                command TEXT,
                target TEXT,
                output_dir TEXT,
                status TEXT DEFAULT 'running',
                elapsed_s REAL DEFAULT 0,
                metrics TEXT,
                message TEXT
            )
        ''')

        conn.commit()
        conn.close()

    def start(self, command, target=None, output_dir=None):
        """Open a ledger row; returns its id"""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            INSERT INTO runs (command, target, output_dir)
            VALUES (?, ?, ?)
        ''', (command, target, None if output_dir is None else str(output_dir)))
        run_id = cursor.lastrowid
        conn.commit()
        conn.close()
        return run_id

    def finish(self, run_id, status, elapsed_s, metrics=None, message=None):
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            UPDATE runs
            SET status = ?, elapsed_s = ?, metrics = ?, message = ?
            WHERE id = ?
        ''', (status, round(float(elapsed_s), 3),
              None if metrics is None else json.dumps(metrics, sort_keys=True), message, run_id))
        conn.commit()
        conn.close()

    def recent(self, limit=20, command=None):
        """Most recent rows first, as a DataFrame"""
        query = '''
            SELECT id, timestamp, command, target, output_dir, status, elapsed_s, metrics, message
            FROM runs
        '''
        params = []
        if command:
            query += " WHERE command = ?"
            params.append(command)
        query += " ORDER BY id DESC LIMIT ?"
        params.append(int(limit))
        conn = sqlite3.connect(self.db_path)
        try:
            return pd.read_sql_query(query, conn, params=params)
        finally:
            conn.close()

    def get_stats(self):
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            SELECT
                COUNT(*),
                SUM(CASE WHEN status = 'ok' THEN 1 ELSE 0 END),
                SUM(CASE WHEN status = 'failed' THEN 1 ELSE 0 END),
                SUM(elapsed_s)
            FROM runs
        ''')
        total, ok, failed, elapsed = cursor.fetchone()
        conn.close()
        return {
            "total_runs": total or 0,
            "succeeded": ok or 0,
            "failed": failed or 0,
            "total_elapsed_s": elapsed or 0.0,
        }


if __name__ == "__main__":
    ledger = RunLedger("test_runs.db")
    run_id = ledger.start("design", "6 GHz")
    ledger.finish(run_id, "ok", 0.01, {"patch_width_mm": 19.75})
    print(f"✅ Logged run ID: {run_id}")
    print(ledger.recent().to_string(index=False))
    print(f"✅ Stats: {ledger.get_stats()}")
