"""
Export Service Module

This module handles run artifact export:
- Per-path CSV exports
- JSON summary reports
- Cleanup of old run directories
"""

import os
import json
import logging
import shutil
import pandas as pd
from datetime import datetime

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

PATH_COLUMNS = ['path_id', 'hit', 'sigma', 'clock', 'exit_x', 'exit_y']


class ExportService:
    """Export service class for handling run artifacts"""

    def __init__(self, app=None):
        """Initialize the export service"""
        self.app = app
        self.output_dir = os.path.join('instance', 'runs')
        self.retention_days = 7
        if app:
            self.init_app(app)

    def init_app(self, app):
        """Initialize with Flask app"""
        self.app = app
        self.output_dir = app.config.get('OUTPUT_DIR', self.output_dir)
        self.retention_days = app.config.get('EXPORT_RETENTION_DAYS', self.retention_days)

    def run_directory(self, name, out_dir=None):
        """
        Create the directory of one run

        Args:
            name (str): Run name
            out_dir (str): Parent directory, the configured output directory by default

        Returns:
            str: Path to the run directory
        """
        path = os.path.join(out_dir or self.output_dir, name)
        os.makedirs(path, exist_ok=True)
        return path

    def export_paths_to_csv(self, rows, filepath, columns=None):
        """
        Export per-path rows to CSV

        Args:
            rows (iterable): Row dictionaries in path-index order
            filepath (str): Destination file
            columns (list): Column order, the path-record columns by default

        Returns:
            str: Path to exported CSV file
        """
        try:
            df = pd.DataFrame(list(rows))
            if columns is None and (df.empty or set(PATH_COLUMNS) <= set(df.columns)):
                columns = PATH_COLUMNS
            if df.empty:
                df = pd.DataFrame(columns=columns or [])
            elif columns:
                df = df[columns]
            df.to_csv(filepath, index=False)
            logger.info(f"Exported {len(df)} path row(s) to CSV: {os.path.basename(filepath)}")
            return filepath

        except Exception as e:
            logger.error(f"Failed to export paths to CSV: {str(e)}")
            return None

    def export_summary_to_json(self, summary, filepath):
        """
        Export a summary report to JSON

        Args:
            summary (dict): Report dictionary
            filepath (str): Destination file

        Returns:
            str: Path to exported JSON file
        """
        try:
            with open(filepath, 'w') as f:
                json.dump(summary, f, indent=2, sort_keys=True, default=str)
            logger.info(f"Exported summary to JSON: {os.path.basename(filepath)}")
            return filepath

        except Exception as e:
            logger.error(f"Failed to export summary to JSON: {str(e)}")
            return None

    def cleanup_old_exports(self, days=None):
        """
        Clean up old run directories

        Args:
            days (int): Number of days to keep runs, EXPORT_RETENTION_DAYS by default

        Returns:
            int: Number of runs cleaned up
        """
        try:
            if not os.path.isdir(self.output_dir):
                return 0
            days = days if days is not None else self.retention_days
            cutoff_time = datetime.now().timestamp() - (days * 24 * 60 * 60)

            cleaned_count = 0
            for name in os.listdir(self.output_dir):
                path = os.path.join(self.output_dir, name)
                if os.path.getmtime(path) < cutoff_time:
                    if os.path.isdir(path):
                        shutil.rmtree(path)
                    else:
                        os.remove(path)
                    cleaned_count += 1

            logger.info(f"Cleaned up {cleaned_count} old run(s)")
            return cleaned_count

        except Exception as e:
            logger.error(f"Failed to cleanup old exports: {str(e)}")
            return 0


# Global export service instance
export_service = ExportService()
