"""
Tests for the FileHandler utility class.
"""

import json
import math
import os
import pytest
import numpy as np
from src.thermo.phases import PhaseLabel
from src.utils.file_handler import FileHandler, content_hash, format_number

def test_init_file_handler():
    """Test FileHandler initialization."""
    handler = FileHandler("test_output")
    assert handler.base_output_dir == "test_output"
    assert handler.current_output_dir is None

def test_get_output_path_without_directory():
    """Test get_output_path when no directory has been created."""
    handler = FileHandler("test_output")
    with pytest.raises(ValueError, match="No output directory has been created"):
        handler.get_output_path("test.json")

def test_get_output_path(temp_dir):
    """Test getting output file path."""
    handler = FileHandler(temp_dir)
    handler.create_output_directory()
    
    # Test simple filename
    path = handler.get_output_path("test.json")
    assert path.endswith("test.json")
    assert path.startswith(handler.current_output_dir)
    
    # Test nested path
    path = handler.get_output_path("subdir/test.json")
    assert path.endswith("subdir/test.json")
    assert path.startswith(handler.current_output_dir)

def test_save_json(temp_dir, sample_json_data):
    """Test saving JSON data."""
    handler = FileHandler(temp_dir)
    handler.create_output_directory()
    
    # Save JSON data
    output_path = handler.save_json(sample_json_data, "test.json")
    
    # Verify file exists
    assert os.path.exists(output_path)
    
    # Verify content
    with open(output_path, 'r', encoding='utf-8') as f:
        saved_data = json.load(f)
    assert saved_data == sample_json_data

def test_save_csv_with_metadata(temp_dir):
    """Test CSV output with a metadata comment line."""
    handler = FileHandler(temp_dir)
    handler.create_output_directory()

    path = handler.save_csv("runs/table.csv", ("h", "v", "sigma"), [(0.5, 0.25, 1 / 3), (1, 0, -0.0)],
                            meta={"n": 2})

    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    assert lines[0] == '# {"n": 2}'
    assert lines[1] == "h,v,sigma"
    assert lines[2] == "0.5,0.25,0.333333333333"
    assert lines[3] == "1,0,-0"

def test_format_number():
    """Test CSV cell formatting."""
    assert format_number(math.pi) == "3.14159265359"
    assert format_number(np.float64(2.5e-20)) == "2.5e-20"
    assert format_number(np.int64(7)) == "7"
    assert format_number(True) == "True"
    assert format_number(None) == ""
    assert format_number(PhaseLabel.DISORDERED) == PhaseLabel.DISORDERED.value
    assert format_number(float("nan")) == "nan"

def test_content_hash_ignores_key_order():
    """Test that the run hash depends only on content."""
    assert content_hash({"a": 1, "b": [1, 2]}) == content_hash({"b": [1, 2], "a": 1})
    assert content_hash({"a": 1}) != content_hash({"a": 2})
    assert len(content_hash({})) == 64
