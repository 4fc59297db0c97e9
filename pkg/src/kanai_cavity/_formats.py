"""Deterministic text output helpers shared by the CSV/JSON writers.

All floating-point values are rendered with 17 significant digits in
lowercase scientific notation so that identical runs produce byte-identical
files on every platform.  Files are written atomically (temp file in the
target directory, then rename) so a failed run never leaves a partial data
file behind.
"""

import json
import os
import tempfile

import numpy as np


def format_float(x):
    """Render a float with 17 significant digits, lowercase scientific."""
    return "{:.16e}".format(float(x))


def format_value(v):
    """Render a CSV cell: ints verbatim, floats via :func:`format_float`."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def csv_text(header, rows):
    """Build the full text of a CSV file from a header list and row tuples."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def _dump_json(obj, indent):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key, val in obj.items():
            items.append('{}{}: {}'.format(inner, json.dumps(str(key)),
                                           _dump_json(val, indent + 1)))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [inner + _dump_json(v, indent + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError("cannot serialize {!r} to JSON".format(type(obj)))


def json_text(obj):
    """Serialize dicts/lists/scalars to JSON with deterministic floats."""
    return _dump_json(obj, 0) + "\n"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a same-directory temp file + rename."""
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path, data):
    """Write ``data`` to ``path`` via a same-directory temp file + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
