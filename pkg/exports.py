"""
Exports - CSV/JSON writers shared by every command.

All numbers pass through fmt() so that repeated runs produce byte-identical files.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from config import OUTPUT_CONFIG


def fmt(value, precision=None):
    """Format a number with a fixed number of significant digits."""
    precision = precision or OUTPUT_CONFIG['precision']
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f'.{precision}g')


def to_plain(obj, precision=None):
    """Convert numpy scalars/arrays inside obj to JSON-friendly values at fixed precision."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v, precision) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v, precision) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return float(fmt(value, precision))
    return obj


def ensure_parent(filepath):
    """Create the parent directory of filepath if needed."""
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)


def write_csv(filepath, header, rows):
    """Write rows under header; numeric cells are formatted with fmt()."""
    ensure_parent(filepath)
    count = 0
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])
            count += 1
    return count


def read_csv(filepath):
    """Read a CSV written by write_csv into a list of dicts of strings."""
    with open(filepath, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


def write_json(filepath, data):
    """Write data as indented JSON with sorted keys."""
    ensure_parent(filepath)
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(to_plain(data), f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(filepath):
    """Load a JSON file."""
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)


def sidecar_path(csv_path):
    """JSON sidecar that sits next to a CSV file."""
    return Path(csv_path).with_suffix('.json')
