"""Canonical binary encoding for every byte message that gets hashed or signed.

The encoding is injective: two values encode to the same bytes only if they
are equal, and every encoding decodes back to the original value.  Supported
values are unsigned 64-bit integers, byte strings, text strings, lists, and
maps with byte-string keys (emitted in ascending key order).

Layout (all lengths/counts big-endian 32-bit unless noted):

    0x01  uint64          8-byte big-endian value
    0x02  bytes           u32 length + raw bytes
    0x03  text            u32 length + UTF-8 bytes
    0x04  list            u32 count + encoded elements
    0x05  map             u32 count + (encoded key, encoded value) pairs,
                          keys strictly ascending byte strings
"""

from __future__ import annotations

from typing import Union

from .errors import CanonicalError

TAG_INT = 0x01
TAG_BYTES = 0x02
TAG_TEXT = 0x03
TAG_LIST = 0x04
TAG_MAP = 0x05

U64_MAX = 2**64 - 1

Value = Union[int, bytes, str, list, dict]


def encode(value: Value) -> bytes:
    """Encode a value to canonical bytes.

    Raises CanonicalError (INT_RANGE, BAD_TYPE, BAD_MAP_KEY) on values
    outside the model.  Map insertion order never matters: entries are
    sorted by key before emission.
    """
    out = bytearray()
    _encode_into(value, out)
    return bytes(out)


def _encode_into(value: Value, out: bytearray) -> None:
    if isinstance(value, bool):
        # bool is an int subclass; reject to keep the model unambiguous
        raise CanonicalError("BAD_TYPE", "bool is not a canonical value")
    if isinstance(value, int):
        if value < 0 or value > U64_MAX:
            raise CanonicalError("INT_RANGE", f"integer out of u64 range: {value}")
        out.append(TAG_INT)
        out += value.to_bytes(8, "big")
    elif isinstance(value, (bytes, bytearray, memoryview)):
        raw = bytes(value)
        out.append(TAG_BYTES)
        out += len(raw).to_bytes(4, "big")
        out += raw
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out.append(TAG_TEXT)
        out += len(raw).to_bytes(4, "big")
        out += raw
    elif isinstance(value, (list, tuple)):
        out.append(TAG_LIST)
        out += len(value).to_bytes(4, "big")
        for item in value:
            _encode_into(item, out)
    elif isinstance(value, dict):
        items = []
        for key, val in value.items():
            if not isinstance(key, (bytes, bytearray)):
                raise CanonicalError("BAD_MAP_KEY", f"map key must be bytes, got {type(key).__name__}")
            items.append((bytes(key), val))
        items.sort(key=lambda kv: kv[0])
        for i in range(1, len(items)):
            if items[i][0] == items[i - 1][0]:
                raise CanonicalError("DUPLICATE_MAP_KEY", repr(items[i][0]))
        out.append(TAG_MAP)
        out += len(items).to_bytes(4, "big")
        for key, val in items:
            _encode_into(key, out)
            _encode_into(val, out)
    else:
        raise CanonicalError("BAD_TYPE", f"cannot encode {type(value).__name__}")


def decode(data: bytes) -> Value:
    """Decode canonical bytes; rejects trailing bytes and non-canonical forms."""
    value, offset = _decode_at(data, 0)
    if offset != len(data):
        raise CanonicalError("TRAILING_BYTES", f"{len(data) - offset} bytes after value")
    return value


def _decode_at(data: bytes, offset: int):
    if offset >= len(data):
        raise CanonicalError("TRUNCATED", "unexpected end of input")
    tag = data[offset]
    offset += 1
    if tag == TAG_INT:
        end = offset + 8
        if end > len(data):
            raise CanonicalError("TRUNCATED", "short integer")
        return int.from_bytes(data[offset:end], "big"), end
    if tag in (TAG_BYTES, TAG_TEXT):
        if offset + 4 > len(data):
            raise CanonicalError("TRUNCATED", "short length prefix")
        size = int.from_bytes(data[offset : offset + 4], "big")
        offset += 4
        end = offset + size
        if end > len(data):
            raise CanonicalError("TRUNCATED", "short string body")
        raw = data[offset:end]
        if tag == TAG_BYTES:
            return bytes(raw), end
        try:
            return raw.decode("utf-8"), end
        except UnicodeDecodeError as exc:
            raise CanonicalError("BAD_UTF8", str(exc)) from None
    if tag == TAG_LIST:
        if offset + 4 > len(data):
            raise CanonicalError("TRUNCATED", "short count prefix")
        count = int.from_bytes(data[offset : offset + 4], "big")
        offset += 4
        items = []
        for _ in range(count):
            item, offset = _decode_at(data, offset)
            items.append(item)
        return items, offset
    if tag == TAG_MAP:
        if offset + 4 > len(data):
            raise CanonicalError("TRUNCATED", "short count prefix")
        count = int.from_bytes(data[offset : offset + 4], "big")
        offset += 4
        result: dict = {}
        prev_key: bytes | None = None
        for _ in range(count):
            key, offset = _decode_at(data, offset)
            if not isinstance(key, bytes):
                raise CanonicalError("BAD_MAP_KEY", "map key is not a byte string")
            if prev_key is not None:
                if key == prev_key:
                    raise CanonicalError("DUPLICATE_MAP_KEY", repr(key))
                if key < prev_key:
                    raise CanonicalError("UNSORTED_MAP", "map keys not ascending")
            prev_key = key
            value, offset = _decode_at(data, offset)
            result[key] = value
        return result, offset
    raise CanonicalError("BAD_TAG", f"unknown tag 0x{tag:02x}")
