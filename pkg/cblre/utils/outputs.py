import csv
import math
import os

from .helpers import format_float


def _cell(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    try:
        return format_float(float(value))
    except (TypeError, ValueError):
        return str(value)


def write_csv(path, header, rows):
    """Comma-separated, header row first, LF line endings, floats in round-trip form."""
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_key_values(path, items):
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        for key, value in items.items():
            if isinstance(value, float) and math.isnan(value):
                value = 'nan'
            fh.write(f"{key}={_cell(value)}\n")
    return path


def write_manifest(path, config_digest, seed, version, kind, outputs):
    items = {
        'experiment': kind,
        'config_sha256': config_digest,
        'seed': seed,
        'tool_version': version,
        'outputs': ','.join(sorted(os.path.basename(p) for p in outputs)),
    }
    return write_key_values(path, items)
