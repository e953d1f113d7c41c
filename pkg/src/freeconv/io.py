"""Measure JSON files and CSV reports."""
import csv
import json

from .exceptions import DomainError
from .measures import measure_from_dict


def load_measure(path):
    """Read a measure description; malformed JSON reports path and position."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from exc
    try:
        return measure_from_dict(data)
    except DomainError as exc:
        raise DomainError(f"{path}: {exc}") from exc


def save_measure(m, path):
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh)


def write_report(path, metadata, header, rows):
    """CSV with a leading block of ``# key,value`` metadata lines."""
    with open(path, "w", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key},{value}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_report(path):
    """Inverse of :func:`write_report`: ``(metadata, header, rows)``."""
    meta, rows, header = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(",")
                meta[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    return meta, header, rows
