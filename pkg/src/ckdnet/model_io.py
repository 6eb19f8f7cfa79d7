"""Binary checkpoints.

Layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"CKDM"
    4       4     u32 format version (1)
    8       4     u32 flags (bit 0: Adam state present; other bits must be 0)
    12      8     u64 payload length P
    20      P     payload
    20+P    4     u32 CRC-32 of the payload

Payload::

    u32 layer count L
    L x layer record: u8 kind, then kind-specific u32 fields
        1 conv    kh, kw, in_channels, out_channels
        2 relu    -
        3 maxpool window
        4 flatten -
        5 dense   fan_in, fan_out
        6 softmax -
    every parameter array in model order, float32 row-major
    if flag bit 0: per parameter, u64 step count, then m, then v (float32)

Shapes are implied by the layer records, so a file is self-describing.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import CKDError, FileError
from .nn.layers import ConvLayer, DenseLayer, Flatten, MaxPool2x2, ReLU, Softmax
from .nn.model import INPUT_SHAPE, Model, build_model
from .nn.optim import AdamState

MAGIC = b"CKDM"
VERSION = 1
FLAG_ADAM = 1
_HEADER = struct.Struct("<4sIIQ")
_KIND_CODES = {"conv": 1, "relu": 2, "maxpool": 3, "flatten": 4, "dense": 5, "softmax": 6}
_F32 = np.dtype("<f4")


class CheckpointError(CKDError):
    pass


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class FormatError(CheckpointError):
    pass


class ArchitectureMismatchError(CheckpointError):
    pass


def _layer_record(layer) -> bytes:
    code = struct.pack("<B", _KIND_CODES[layer.kind])
    if layer.kind == "conv":
        return code + struct.pack("<4I", *layer.kernels.shape)
    if layer.kind == "dense":
        return code + struct.pack("<2I", *layer.weights.shape)
    if layer.kind == "maxpool":
        return code + struct.pack("<I", 2)
    return code


def encode_checkpoint(model: Model, include_adam: bool = True) -> bytes:
    parts = [struct.pack("<I", len(model.layers))]
    parts += [_layer_record(layer) for layer in model.layers]
    parts += [np.ascontiguousarray(p, dtype=_F32).tobytes() for p in model.params()]
    if include_adam:
        for state in model.adam_states:
            parts.append(struct.pack("<Q", state.t))
            parts.append(np.ascontiguousarray(state.m, dtype=_F32).tobytes())
            parts.append(np.ascontiguousarray(state.v, dtype=_F32).tobytes())
    payload = b"".join(parts)
    flags = FLAG_ADAM if include_adam else 0
    return (_HEADER.pack(MAGIC, VERSION, flags, len(payload)) + payload
            + struct.pack("<I", zlib.crc32(payload)))


def save_checkpoint(model: Model, path, include_adam: bool = True) -> None:
    data = encode_checkpoint(model, include_adam)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise FileError(f"cannot write checkpoint {path}: {exc}") from exc


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError("payload ends early")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def array(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return np.frombuffer(self.take(4 * n), dtype=_F32).reshape(shape).astype(np.float32)


def _read_layers(r: _Reader) -> list:
    (count,) = r.unpack("<I")
    if count > 64:
        raise FormatError(f"implausible layer count {count}")
    specs = []
    for _ in range(count):
        (code,) = r.unpack("<B")
        if code == 1:
            specs.append(("conv", r.unpack("<4I")))
        elif code == 5:
            specs.append(("dense", r.unpack("<2I")))
        elif code == 3:
            (window,) = r.unpack("<I")
            if window != 2:
                raise ArchitectureMismatchError(f"pooling window {window} is not 2")
            specs.append(("maxpool", ()))
        elif code in (2, 4, 6):
            specs.append(({2: "relu", 4: "flatten", 6: "softmax"}[code], ()))
        else:
            raise FormatError(f"unknown layer kind code {code}")
    return specs


def _check_architecture(specs) -> None:
    expected = [(layer.kind, tuple(p.shape for p in layer.params)[:1])
                for layer in build_model(0).layers]
    got = [(kind, (tuple(dims),) if dims else ()) for kind, dims in specs]
    if [k for k, _ in got] != [k for k, _ in expected]:
        raise ArchitectureMismatchError(
            f"layer kinds {[k for k, _ in got]} differ from the expected stack")
    for i, (g, e) in enumerate(zip(got, expected)):
        if g[1] != e[1]:
            raise ArchitectureMismatchError(f"layer {i} ({g[0]}) has shape {g[1]}, expected {e[1]}")


def decode_checkpoint(data: bytes) -> Model:
    if len(data) < _HEADER.size + 4:
        raise FormatError("file too short for a checkpoint header")
    magic, version, flags, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported checkpoint version {version}")
    if flags & ~FLAG_ADAM:
        raise FormatError(f"unknown flag bits {flags:#x}")
    if len(data) != _HEADER.size + length + 4:
        raise FormatError(f"file is {len(data)} bytes, header implies {_HEADER.size + length + 4}")
    payload = data[_HEADER.size:_HEADER.size + length]
    (crc,) = struct.unpack_from("<I", data, _HEADER.size + length)
    if zlib.crc32(payload) != crc:
        raise ChecksumError("payload CRC-32 mismatch")

    r = _Reader(payload)
    specs = _read_layers(r)
    _check_architecture(specs)
    layers = []
    for kind, dims in specs:
        if kind == "conv":
            layers.append(ConvLayer(r.array(dims), r.array((dims[3],))))
        elif kind == "dense":
            layers.append(DenseLayer(r.array(dims), r.array((dims[1],))))
        else:
            layers.append({"relu": ReLU, "maxpool": MaxPool2x2, "flatten": Flatten,
                           "softmax": Softmax}[kind]())
    model = Model(layers)
    if flags & FLAG_ADAM:
        states = []
        for p in model.params():
            (t,) = r.unpack("<Q")
            states.append(AdamState(r.array(p.shape), r.array(p.shape), int(t)))
        model.adam_states = states
    if r.pos != len(payload):
        raise FormatError(f"{len(payload) - r.pos} trailing payload bytes")
    try:
        model.activation_shapes((1, *INPUT_SHAPE))
    except CKDError as exc:
        raise ArchitectureMismatchError(str(exc)) from exc
    return model


def load_checkpoint(path) -> Model:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FileError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode_checkpoint(data)
