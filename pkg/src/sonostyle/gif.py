"""Read-only GIF87a/GIF89a decoder with frame compositing.

Each image block is LZW-decoded, drawn onto the logical screen (honoring
the transparent index of its graphic control extension) and the composited
screen is emitted as one frame. Disposal methods 0 and 1 leave the screen
as is, 2 restores the frame rectangle to the background color, 3 (restore
previous) is rejected.
"""

from __future__ import annotations

import struct

import numpy as np


class GifError(ValueError):
    """Malformed or unsupported GIF data."""


class GifMagicError(GifError):
    pass


class GifLZWError(GifError):
    pass


class GifTrailerError(GifError):
    pass


class GifDisposalError(GifError):
    pass


_MAX_CODES = 4096


def lzw_decode(data: bytes, min_code_size: int, n_pixels: int) -> bytes:
    """Decode a GIF LZW stream to exactly ``n_pixels`` color indices."""
    if not 2 <= min_code_size <= 11:
        raise GifLZWError(f"invalid LZW minimum code size {min_code_size}")
    clear = 1 << min_code_size
    eoi = clear + 1
    base = [bytes([i]) for i in range(clear)] + [b"", b""]
    table = list(base)
    code_size = min_code_size + 1
    out = bytearray()
    prev = None
    bitbuf = nbits = pos = 0
    n_data = len(data)
    while len(out) < n_pixels:
        while nbits < code_size:
            if pos >= n_data:
                raise GifLZWError(f"LZW stream ended after {len(out)} of {n_pixels} pixels")
            bitbuf |= data[pos] << nbits
            pos += 1
            nbits += 8
        code = bitbuf & ((1 << code_size) - 1)
        bitbuf >>= code_size
        nbits -= code_size
        if code == clear:
            table = list(base)
            code_size = min_code_size + 1
            prev = None
            continue
        if code == eoi:
            break
        if prev is None:
            if code >= clear:
                raise GifLZWError(f"invalid first code {code} after clear")
            entry = table[code]
        elif code < len(table):
            entry = table[code]
            if len(table) < _MAX_CODES:
                table.append(prev + entry[:1])
        elif code == len(table):
            entry = prev + prev[:1]
            if len(table) < _MAX_CODES:
                table.append(entry)
        else:
            raise GifLZWError(f"code {code} beyond table size {len(table)}")
        out += entry
        prev = entry
        if len(table) == (1 << code_size) and code_size < 12:
            code_size += 1
    if len(out) < n_pixels:
        raise GifLZWError(f"LZW stream produced {len(out)} of {n_pixels} pixels")
    return bytes(out[:n_pixels])


def _read_color_table(buf: bytes, pos: int, flags: int):
    size = 2 << (flags & 0x07)
    end = pos + 3 * size
    if end > len(buf):
        raise GifTrailerError("color table truncated")
    table = np.frombuffer(buf[pos:end], dtype=np.uint8).reshape(size, 3)
    return table, end


def _read_subblocks(buf: bytes, pos: int):
    chunks = []
    while True:
        if pos >= len(buf):
            raise GifTrailerError("data sub-blocks truncated")
        n = buf[pos]
        pos += 1
        if n == 0:
            return b"".join(chunks), pos
        if pos + n > len(buf):
            raise GifTrailerError("data sub-block truncated")
        chunks.append(buf[pos:pos + n])
        pos += n


def _deinterlace(indices: np.ndarray) -> np.ndarray:
    h = indices.shape[0]
    rows = [r for start, step in ((0, 8), (4, 8), (2, 4), (1, 2)) for r in range(start, h, step)]
    out = np.empty_like(indices)
    out[rows] = indices
    return out


def decode_gif_bytes(buf: bytes) -> list:
    """Decode GIF bytes into composited RGB frames ``(H, W, 3)`` in [0, 1]."""
    if len(buf) < 13 or buf[:6] not in (b"GIF87a", b"GIF89a"):
        raise GifMagicError("not a GIF87a/GIF89a file")
    width, height, flags, bg_index, _aspect = struct.unpack("<HHBBB", buf[6:13])
    pos = 13
    global_table = None
    if flags & 0x80:
        global_table, pos = _read_color_table(buf, pos, flags)
    background = np.zeros(3, dtype=np.uint8)
    if global_table is not None and bg_index < len(global_table):
        background = global_table[bg_index]
    screen = np.empty((height, width, 3), dtype=np.uint8)
    screen[:] = background

    frames = []
    disposal, transparent = 0, None
    while True:
        if pos >= len(buf):
            raise GifTrailerError("missing GIF trailer")
        marker = buf[pos]
        pos += 1
        if marker == 0x3B:
            break
        if marker == 0x21:
            if pos >= len(buf):
                raise GifTrailerError("extension truncated")
            label = buf[pos]
            pos += 1
            body, pos = _read_subblocks(buf, pos)
            if label == 0xF9 and len(body) >= 4:
                packed = body[0]
                disposal = (packed >> 2) & 0x07
                transparent = body[3] if packed & 0x01 else None
            continue
        if marker != 0x2C:
            raise GifError(f"unknown block marker 0x{marker:02x} at offset {pos - 1}")
        if pos + 9 > len(buf):
            raise GifTrailerError("image descriptor truncated")
        left, top, w, h, iflags = struct.unpack("<HHHHB", buf[pos:pos + 9])
        pos += 9
        table = global_table
        if iflags & 0x80:
            table, pos = _read_color_table(buf, pos, iflags)
        if table is None:
            raise GifError("image has no color table")
        if pos >= len(buf):
            raise GifTrailerError("image data truncated")
        min_code = buf[pos]
        pos += 1
        data, pos = _read_subblocks(buf, pos)
        if disposal == 3:
            raise GifDisposalError("disposal method 3 (restore previous) is not supported")
        indices = np.frombuffer(lzw_decode(data, min_code, w * h), dtype=np.uint8).reshape(h, w)
        if iflags & 0x40:
            indices = _deinterlace(indices)
        if indices.max(initial=0) >= len(table):
            raise GifError("color index outside color table")

        # clip the frame rectangle to the logical screen
        y1, x1 = min(top + h, height), min(left + w, width)
        region = indices[:max(0, y1 - top), :max(0, x1 - left)]
        target = screen[top:y1, left:x1]
        colors = table[region]
        if transparent is None:
            target[...] = colors
        else:
            opaque = region != transparent
            target[opaque] = colors[opaque]
        frames.append(screen.astype(np.float64) / 255.0)

        if disposal == 2:
            screen[top:y1, left:x1] = background
        disposal, transparent = 0, None
    return frames


def decode_gif_frames(path) -> list:
    """Decode every frame of a GIF file; see :func:`decode_gif_bytes`."""
    with open(path, "rb") as fh:
        return decode_gif_bytes(fh.read())
