"""
File handling utilities for managing output files and directories.
"""

import csv
import hashlib
import json
import logging
import os
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


class FileHandler:
    """Handles output files of the six-vertex toolkit."""
    
    def __init__(self, base_output_dir: str = "output"):
        """
        Initialize the file handler.
        
        Args:
            base_output_dir: Base directory for output files
        """
        self.base_output_dir = base_output_dir
        self.current_output_dir = None
        
    def create_output_directory(self) -> str:
        """
        Create the output directory.
        
        Returns:
            Path to the created directory
        """
        os.makedirs(self.base_output_dir, exist_ok=True)
        self.current_output_dir = self.base_output_dir
        logger.debug(f"Created output directory: {self.base_output_dir}")
        return self.base_output_dir
        
    def get_output_path(self, filename: str) -> str:
        """
        Get the full path for an output file.
        
        Args:
            filename: Name of the output file
            
        Returns:
            Full path to the output file
            
        Raises:
            ValueError: If no output directory has been created
        """
        if not self.current_output_dir:
            logger.error("No output directory has been created")
            raise ValueError("No output directory has been created")
            
        # Ensure we don't duplicate the output directory in the path
        if filename.startswith(self.base_output_dir):
            logger.warning(f"Filename '{filename}' starts with output directory path")
            # Strip the base output directory from the start if it's there
            filename = filename[len(self.base_output_dir):].lstrip('/')
                
        full_path = os.path.join(self.current_output_dir, filename)
        logger.debug(f"Generated output path: {full_path}")
        return full_path
        
    def save_json(self, data: Any, filename: str) -> str:
        """
        Save data as JSON to the output directory.
        
        Args:
            data: Data to save
            filename: Name of the output file
            
        Returns:
            Path to the saved file
        """
        output_path = self.get_output_path(filename)
        os.makedirs(os.path.dirname(output_path), exist_ok=True)
        
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2)
            
        logger.debug(f"Saved JSON data to: {output_path}")
        return output_path
        
    def save_csv(self, filename: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
                 meta: Optional[Dict] = None) -> str:
        """
        Save rows as CSV with numbers at 12 significant digits.

        Args:
            filename: Name of the output file
            header: Column names
            rows: Row values; floats are formatted, everything else is written as text
            meta: Optional metadata written as a leading ``# `` JSON comment line

        Returns:
            Path to the saved file
        """
        output_path = self.get_output_path(filename)
        os.makedirs(os.path.dirname(output_path), exist_ok=True)

        with open(output_path, 'w', encoding='utf-8', newline='') as f:
            if meta is not None:
                f.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow([format_number(v) for v in row])
                count += 1

        logger.debug(f"Saved {count} CSV rows to: {output_path}")
        return output_path


def format_number(value: Any, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Locale-independent text for a CSV cell; floats get ``digits`` significant digits."""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, str)) or value is None:
        return "" if value is None else str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{digits}g}"


def content_hash(payload: Any) -> str:
    """sha256 of the canonical JSON form of ``payload``."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
