"""
navlab - Checkpoint Codec
Versioned little-endian binary for network and optimizer tensors.

Layout:
    magic  b'NAVLABCK'
    u16    format version
    str    architecture tag
    u32    tensor count
    per tensor: str name, u8 ndim, u32 dims..., float64 data (little-endian)
where str is a u16 byte length followed by UTF-8.
"""

import struct
from pathlib import Path

import numpy as np

from utils.errors import ConfigError

MAGIC = b'NAVLABCK'
FORMAT_VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode('utf-8')
    return struct.pack('<H', len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ConfigError('Checkpoint is truncated')
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack('<H')
        return self.take(n).decode('utf-8')


def encode_checkpoint(arch: str, tensors: dict) -> bytes:
    parts = [MAGIC, struct.pack('<H', FORMAT_VERSION), _pack_str(arch), struct.pack('<I', len(tensors))]
    for name, value in tensors.items():
        value = np.asarray(value, dtype='<f8')
        parts.append(_pack_str(name))
        parts.append(struct.pack('<B', value.ndim))
        parts.append(struct.pack(f'<{value.ndim}I', *value.shape))
        parts.append(value.tobytes(order='C'))
    return b''.join(parts)


def decode_checkpoint(blob: bytes) -> tuple:
    """(arch, tensors) from encoded bytes; tensors keep their saved order."""
    reader = _Reader(blob)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ConfigError('Not a navlab checkpoint (bad magic)')
    (version,) = reader.unpack('<H')
    if version != FORMAT_VERSION:
        raise ConfigError(f'Unsupported checkpoint version {version}')
    arch = reader.string()
    (count,) = reader.unpack('<I')
    tensors = {}
    for _ in range(count):
        name = reader.string()
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}I') if ndim else ()
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(reader.take(8 * size), dtype='<f8').astype(np.float64)
        tensors[name] = data.reshape(shape)
    if reader.pos != len(blob):
        raise ConfigError('Trailing bytes after the last tensor')
    return arch, tensors


def save_checkpoint(path, arch: str, tensors: dict):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + '.tmp')
    tmp.write_bytes(encode_checkpoint(arch, tensors))
    tmp.replace(path)
    return path


def load_checkpoint(path) -> tuple:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f'Cannot read checkpoint {path}: {e}')
    return decode_checkpoint(blob)
