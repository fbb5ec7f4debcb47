"""Deterministic file I/O helpers.

All writers are byte-stable: floats go through ``repr`` (shortest exact
round-trip), JSON keys are sorted, and nothing records clocks or hosts, so
rerunning a command with the same inputs reproduces identical files.
"""
import csv
import hashlib
import json
import os

from .errors import ConfigError


def fmt(value):
    """Stable text for one CSV cell."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def save_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_config(path):
    """Scenario/config dictionary from a JSON file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return obj


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(path, command, args, inputs=None, outputs=None, extra=None):
    """Record what a command did: resolved arguments and file hashes.

    Contains no timestamps or environment details, so the manifest itself
    is reproducible.
    """
    manifest = {
        "command": command,
        "args": args,
        "inputs": {name: {"path": p, "sha256": sha256_file(p)}
                   for name, p in (inputs or {}).items()},
        "outputs": {name: sha256_file(p) for name, p in (outputs or {}).items()},
    }
    if extra:
        manifest.update(extra)
    save_json(path, manifest)
    return manifest
