"""Checkpoint files and learning-curve text output.

A checkpoint is an ASCII header followed by the raw little-endian f64
parameter vector: magic line, architecture signature with its hash, the
training step count and seed, the parameter count, then a "data" line
terminating the header. Writing the same state twice produces identical
bytes. Curves are plain comma-separated text with a header row.
"""

import csv
import hashlib
import zlib

import numpy as np

_MAGIC = "WIRECKPT"
_VERSION = 1


class CheckpointError(ValueError):
    """Malformed or corrupted checkpoint files."""


def spec_hash(signature: str) -> str:
    """Short stable hash of an architecture signature string."""
    return hashlib.sha256(signature.encode()).hexdigest()[:16]


def dumps_checkpoint(params, signature: str, step: int, seed: int) -> bytes:
    params = np.ascontiguousarray(np.asarray(params, dtype="<f8"))
    if params.ndim != 1:
        raise CheckpointError("parameter vector must be one-dimensional")
    payload = params.tobytes()
    lines = [
        f"{_MAGIC} {_VERSION}",
        f"net = {signature}",
        f"hash = {spec_hash(signature)}",
        f"step = {int(step)}",
        f"seed = {int(seed)}",
        f"params = {params.size}",
        f"crc = {zlib.crc32(payload)}",
        "data",
    ]
    return ("\n".join(lines) + "\n").encode("ascii") + payload


def loads_checkpoint(blob: bytes):
    """(params, meta) from checkpoint bytes; meta keys net/hash/step/seed."""
    end = blob.find(b"data\n")
    if end < 0 or not blob.startswith(_MAGIC.encode()):
        raise CheckpointError("not a checkpoint: bad signature or missing header")
    header = blob[:end].decode("ascii").splitlines()
    magic = header[0].split()
    if magic[0] != _MAGIC or int(magic[1]) != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header[0]!r}")
    meta = {}
    for line in header[1:]:
        key, _, value = line.partition(" = ")
        meta[key.strip()] = value.strip()
    for key in ("net", "hash", "step", "seed", "params", "crc"):
        if key not in meta:
            raise CheckpointError(f"header missing {key!r}")
    if meta["hash"] != spec_hash(meta["net"]):
        raise CheckpointError("architecture hash does not match its signature")
    count = int(meta["params"])
    payload = blob[end + len(b"data\n") :]
    if len(payload) != count * 8:
        raise CheckpointError(
            f"payload holds {len(payload)} bytes, expected {count * 8}"
        )
    if zlib.crc32(payload) != int(meta["crc"]):
        raise CheckpointError("parameter checksum mismatch")
    params = np.frombuffer(payload, dtype="<f8").copy()
    return params, {
        "net": meta["net"],
        "hash": meta["hash"],
        "step": int(meta["step"]),
        "seed": int(meta["seed"]),
    }


def save_checkpoint(path, params, signature: str, step: int, seed: int):
    with open(path, "wb") as fh:
        fh.write(dumps_checkpoint(params, signature, step, seed))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return loads_checkpoint(fh.read())


def save_curve(path, rows, header):
    """Write learning-curve rows as comma-separated text."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def load_curve(path):
    """(header, rows) with numeric fields parsed back to int/float."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(int(cell))
                except ValueError:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        row.append(cell)
            rows.append(tuple(row))
    return header, rows
