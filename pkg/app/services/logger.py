import logging
import os
import json
from datetime import datetime
from pathlib import Path
from typing import Dict, Any, Optional

from app.config import get_settings


class VerificationLogger:
    def __init__(self, log_dir: Optional[Path] = None):
        settings = get_settings()
        self.enabled = settings.log_enabled
        self.log_dir = Path(log_dir) if log_dir is not None else settings.log_dir
        self.logger = logging.getLogger('verification_logger')
        self.logger.setLevel(logging.INFO)
        self.logger.propagate = False

        if not self.enabled:
            return

        # Create logs directory if it doesn't exist
        self.log_dir.mkdir(parents=True, exist_ok=True)
        log_file = self.log_dir / f'verifications_{datetime.now().strftime("%Y%m%d")}.log'

        # One file handler per process; re-pointed when the directory changes
        for handler in list(self.logger.handlers):
            if isinstance(handler, logging.FileHandler) and handler.baseFilename != os.path.abspath(log_file):
                self.logger.removeHandler(handler)
                handler.close()
        if not any(isinstance(h, logging.FileHandler) for h in self.logger.handlers):
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(logging.INFO)
            formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

    def log_operation(self,
                      operation: str,
                      parameters: Dict[str, Any],
                      results: Dict[str, Any],
                      metadata: Dict[str, Any] = None):
        """
        Log a completed verification operation.

        Args:
            operation: Name of the operation (verify, replay, mori, ...)
            parameters: Inputs of the run, e.g. {"n": 6, "m": 6}
            results: Summary of the outcome
            metadata: Additional information about the run
        """
        if not self.enabled:
            return
        log_entry = {
            'timestamp': datetime.now().isoformat(),
            'operation': operation,
            'parameters': parameters,
            'results': results,
            'metadata': metadata or {}
        }
        self.logger.info(json.dumps(log_entry, sort_keys=True, default=str))

    def log_certificate(self, setup: Dict[str, Any], target: str, outcome: str):
        """Log the outcome of a single certification."""
        self.log_operation('certify', dict(setup, target=target), {'outcome': outcome})

    def get_history(self, operation: Optional[str] = None) -> list:
        """
        Read back logged entries, oldest first.

        Args:
            operation: Only return entries of this operation when given

        Returns:
            List of parsed log entries
        """
        history = []
        if not self.log_dir.exists():
            return history

        for log_file in sorted(self.log_dir.glob('verifications_*.log')):
            with open(log_file, 'r') as f:
                for line in f:
                    try:
                        log_entry = json.loads(line.split(' - ', 3)[-1])
                    except json.JSONDecodeError:
                        continue
                    if operation is None or log_entry.get('operation') == operation:
                        history.append(log_entry)

        return history
