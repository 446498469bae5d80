"""Checkpoint file format.

A checkpoint is a single file: a UTF-8 text header describing format
version, input shape, dtype, the layer list and free-form metadata, a
``payload_floats`` count, a ``---`` separator line, then the raw
little-endian weight payload (per parameterized layer in order: weight then
bias, row-major).
"""

from pathlib import Path

import numpy as np

from ..autodiff import NetworkGraph, layer_from_spec
from ..errors import CheckpointError

FORMAT_VERSION = "gendetect-ckpt-1"
_SEPARATOR = b"---\n"


def _flat_weights(net):
    parts = []
    for blocks in net.weight_blocks():
        parts.append(blocks["weight"].ravel())
        parts.append(blocks["bias"].ravel())
    return np.concatenate(parts) if parts else np.zeros(0, dtype=net.dtype)


def save_checkpoint(net, path, metadata=None):
    """Write net architecture + weights + metadata; round trips bit-exactly."""
    flat = _flat_weights(net)
    lines = [FORMAT_VERSION]
    lines += net.describe()
    for key, value in (metadata or {}).items():
        if any(ch.isspace() for ch in str(key)):
            raise CheckpointError(f"metadata key may not contain whitespace: {key!r}")
        lines.append(f"meta {key} {value}")
    lines.append(f"payload_floats {flat.size}")
    header = "\n".join(lines) + "\n"
    le = f"<{net.dtype.kind}{net.dtype.itemsize}"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(_SEPARATOR)
        fh.write(flat.astype(le, copy=False).tobytes())
    return path


def load_checkpoint(path):
    """Read a checkpoint back into a network; returns (net, metadata dict)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    sep = raw.find(_SEPARATOR)
    if sep < 0:
        raise CheckpointError("corrupt header: missing '---' separator")
    header = raw[:sep].decode("utf-8").splitlines()
    payload = raw[sep + len(_SEPARATOR) :]
    if not header or header[0] != FORMAT_VERSION:
        got = header[0] if header else "<empty>"
        raise CheckpointError(f"version mismatch: expected {FORMAT_VERSION}, got {got!r}")

    input_shape = None
    dtype = None
    layer_lines = []
    metadata = {}
    payload_floats = None
    for line in header[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "input":
            input_shape = tuple(int(v) for v in rest.split(","))
        elif key == "dtype":
            dtype = np.dtype(rest)
        elif key == "layer":
            layer_lines.append(rest)
        elif key == "meta":
            mkey, _, mval = rest.partition(" ")
            metadata[mkey] = mval
        elif key == "payload_floats":
            payload_floats = int(rest)
        else:
            raise CheckpointError(f"corrupt header: unknown field {key!r}")
    for field_name, value in (("input", input_shape), ("dtype", dtype), ("payload_floats", payload_floats)):
        if value is None:
            raise CheckpointError(f"corrupt header: missing field {field_name!r}")
    if not layer_lines:
        raise CheckpointError("corrupt header: missing field 'layer'")

    try:
        net = NetworkGraph(input_shape, [layer_from_spec(l) for l in layer_lines], dtype=dtype)
    except Exception as exc:
        raise CheckpointError(f"corrupt header: architecture does not build: {exc}") from exc
    expected = sum(b["weight"].size + b["bias"].size for b in net.weight_blocks())
    if payload_floats != expected:
        raise CheckpointError(
            f"architecture/payload size mismatch: header says {payload_floats} floats, "
            f"architecture needs {expected}"
        )
    if len(payload) != payload_floats * dtype.itemsize:
        raise CheckpointError(
            f"payload length: expected {payload_floats * dtype.itemsize} bytes, got {len(payload)}"
        )
    le = f"<{dtype.kind}{dtype.itemsize}"
    flat = np.frombuffer(payload, dtype=le).astype(dtype, copy=True)
    offset = 0
    for layer in net.param_layers:
        blocks = {}
        for name in ("weight", "bias"):
            size = layer.params[name].size
            blocks[name] = flat[offset : offset + size].reshape(layer.params[name].shape)
            offset += size
        layer.set_params_from(blocks)
    net.mark_updated()
    return net, metadata
