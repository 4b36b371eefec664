#!/usr/bin/env python3
"""
Artifact store for hamlearn
Deterministic JSON, CSV and compressed system dumps with a checksum manifest
"""

import csv
import gzip
import hashlib
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from hamlearn.eeb import EEBSystem, ExpectationTable
from hamlearn.oracle import CSV_COLUMNS, table_rows

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SYSTEM_NAME = "system.json"


def to_jsonable(value: Any) -> Any:
    """numpy scalars and arrays to plain Python; non-finite floats to None"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    return value


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


class ArtifactStore:
    """Writes the artifacts of one run into a single directory

    Nothing time dependent is written, so identical inputs give identical bytes.
    """

    def __init__(self, output_dir: Union[str, Path], compress: bool = False, compression_level: int = 6):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.compress = compress
        self.compression_level = compression_level
        self.written: Dict[str, str] = {}

    def _calculate_checksum(self, data: bytes) -> str:
        return hashlib.sha256(data).hexdigest()

    def _write_bytes(self, name: str, data: bytes) -> Path:
        path = self.output_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
        self.written[name] = self._calculate_checksum(data)
        logger.info(f"wrote {path} ({len(data)} bytes)")
        return path

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def record(self, name: str) -> str:
        """Register a file written by someone else (plots) in the manifest"""
        with open(self.output_dir / name, "rb") as f:
            checksum = self._calculate_checksum(f.read())
        self.written[name] = checksum
        return checksum

    def write_json(self, name: str, data: Any) -> Path:
        return self._write_bytes(name, dumps(data).encode("utf-8"))

    def write_csv(self, name: str, fieldnames: List[str], rows: Iterable[Dict]) -> Path:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
        return self._write_bytes(name, buffer.getvalue().encode("utf-8"))

    def write_table(self, table: ExpectationTable, name: str = "tables.csv") -> Path:
        return self.write_csv(name, CSV_COLUMNS, table_rows(table))

    def write_system(self, system: EEBSystem, compress: Optional[bool] = None) -> Path:
        compress = self.compress if compress is None else compress
        payload = dumps(system.to_dict()).encode("utf-8")
        if compress:
            # mtime=0 keeps the gzip header free of timestamps
            payload = gzip.compress(payload, compresslevel=self.compression_level, mtime=0)
            return self._write_bytes(SYSTEM_NAME + ".gz", payload)
        return self._write_bytes(SYSTEM_NAME, payload)

    def write_manifest(self) -> Path:
        manifest = {"files": dict(sorted(self.written.items())), "algorithm": "sha256"}
        path = self.output_dir / MANIFEST_NAME
        with open(path, "w") as f:
            f.write(dumps(manifest))
        return path

    def verify_manifest(self) -> List[str]:
        """Names whose checksum no longer matches (missing files included)"""
        with open(self.output_dir / MANIFEST_NAME, "r") as f:
            manifest = json.load(f)
        mismatched = []
        for name, checksum in manifest["files"].items():
            path = self.output_dir / name
            if not path.exists():
                mismatched.append(name)
                continue
            with open(path, "rb") as f:
                if self._calculate_checksum(f.read()) != checksum:
                    mismatched.append(name)
        return mismatched


def load_system(path: Union[str, Path]) -> EEBSystem:
    """Read a system dump written by ArtifactStore.write_system"""
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read()
    if path.suffix == ".gz":
        raw = gzip.decompress(raw)
    return EEBSystem.from_dict(json.loads(raw.decode("utf-8")))


def load_report(path: Union[str, Path]) -> Dict:
    with open(path, "r") as f:
        return json.load(f)
