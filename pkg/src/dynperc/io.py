"""CSV tables with a parameter header, run manifests and atomic output directories."""
from __future__ import annotations

import csv
import io
import json
import os
import shutil
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from . import __version__


def build_tag() -> str:
    """``git describe``-style tag of the source tree, or the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5, check=True)
        tag = out.stdout.strip()
        if tag:
            return f"dynperc-{__version__}-{tag}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"dynperc-{__version__}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def csv_text(columns, rows, header: dict | None = None, tag: str | None = None) -> str:
    """CSV with a ``# key: value`` header block echoing the parameters."""
    buf = io.StringIO()
    if tag is not None:
        buf.write(f"# build: {tag}\n")
    for key, val in (header or {}).items():
        buf.write(f"# {key}: {json.dumps(val, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(c) for c in columns]
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> tuple[dict, list[dict]]:
    """Header block (parsed values) and rows (strings) of a CSV written by :func:`csv_text`."""
    header = {}
    lines = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(": ")
                header[key] = val if key == "build" else json.loads(val)
            else:
                lines.append(line)
    return header, list(csv.DictReader(lines))


class OutputDir:
    """Write into a hidden sibling directory and rename it into place on success.

    The target must not exist (or be empty); on failure the partial
    directory is removed.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._tmp: Path | None = None

    def __enter__(self) -> "OutputDir":
        if self.path.exists() and (not self.path.is_dir() or any(self.path.iterdir())):
            raise FileExistsError(f"output directory {self.path} already exists and is not empty")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._tmp = Path(tempfile.mkdtemp(prefix=f".{self.path.name}.", dir=self.path.parent))
        return self

    def file(self, name: str) -> Path:
        return self._tmp / name

    def write_text(self, name: str, text: str) -> Path:
        p = self.file(name)
        p.write_text(text)
        return p

    def write_csv(self, name, columns, rows, header=None, tag=None) -> Path:
        return self.write_text(name, csv_text(columns, rows, header, tag))

    def write_json(self, name, data) -> Path:
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            if self.path.exists():
                self.path.rmdir()
            os.replace(self._tmp, self.path)
        else:
            shutil.rmtree(self._tmp, ignore_errors=True)
        return False


__all__ = ["build_tag", "csv_text", "read_csv", "OutputDir"]
