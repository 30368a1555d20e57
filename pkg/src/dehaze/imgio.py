"""Bit-exact image file formats: binary PPM (8-bit), PAM (16-bit), DFT1 tensors.

Readers return (1, h, w, 3) float32 tensors scaled to [0, 1]; writers
quantize by rounding to the nearest level. No compression, no external
decoders.
"""

from __future__ import annotations

import numpy as np

from .tensor import check_tensor, load_dft1, save_dft1


class ImageFormatError(ValueError):
    """Unreadable or unsupported image file."""


def _read_ppm_tokens(raw: bytes, count: int):
    """Yield header tokens, skipping whitespace and # comments."""
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(raw):
            raise ImageFormatError("truncated header")
        ch = raw[i:i + 1]
        if ch == b"#":
            while i < len(raw) and raw[i:i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace():
                j += 1
            tokens.append(raw[i:j])
            i = j
    return tokens, i + 1  # single whitespace byte terminates the header


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] != b"P6":
        raise ImageFormatError(f"{path}: not a binary PPM (P6)")
    tokens, body = _read_ppm_tokens(raw, 4)
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 supported, got {maxval}")
    need = w * h * 3
    data = raw[body:body + need]
    if len(data) != need:
        raise ImageFormatError(f"{path}: expected {need} pixel bytes, got {len(data)}")
    img = np.frombuffer(data, dtype=np.uint8).reshape(1, h, w, 3)
    return (img.astype(np.float32) / 255.0)


def write_ppm(path, x: np.ndarray) -> None:
    check_tensor(x)
    if x.shape[0] != 1 or x.shape[3] != 3:
        raise ValueError(f"PPM wants a (1,h,w,3) tensor, got {x.shape}")
    levels = np.clip(np.rint(x[0] * 255.0), 0, 255).astype(np.uint8)
    h, w = levels.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(levels.tobytes())


def read_pam(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if not raw.startswith(b"P7"):
        raise ImageFormatError(f"{path}: not a PAM (P7)")
    end = raw.find(b"ENDHDR\n")
    if end < 0:
        raise ImageFormatError(f"{path}: missing ENDHDR")
    fields = {}
    for line in raw[:end].decode("ascii", "replace").splitlines()[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition(" ")
        fields[key] = val.strip()
    try:
        w, h = int(fields["WIDTH"]), int(fields["HEIGHT"])
        depth, maxval = int(fields["DEPTH"]), int(fields["MAXVAL"])
    except KeyError as e:
        raise ImageFormatError(f"{path}: missing header field {e}") from e
    if depth != 3 or maxval != 65535:
        raise ImageFormatError(
            f"{path}: only 16-bit RGB supported (depth 3, maxval 65535)")
    body = raw[end + len(b"ENDHDR\n"):]
    need = w * h * 3 * 2
    if len(body) != need:
        raise ImageFormatError(f"{path}: expected {need} body bytes, got {len(body)}")
    img = np.frombuffer(body, dtype=">u2").reshape(1, h, w, 3)
    return img.astype(np.float32) / 65535.0


def write_pam(path, x: np.ndarray) -> None:
    check_tensor(x)
    if x.shape[0] != 1 or x.shape[3] != 3:
        raise ValueError(f"PAM wants a (1,h,w,3) tensor, got {x.shape}")
    levels = np.clip(np.rint(x[0].astype(np.float64) * 65535.0), 0, 65535)
    levels = levels.astype(">u2")
    h, w = levels.shape[:2]
    header = (f"P7\nWIDTH {w}\nHEIGHT {h}\nDEPTH 3\nMAXVAL 65535\n"
              f"TUPLTYPE RGB\nENDHDR\n")
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(levels.tobytes())


def load_image(path) -> np.ndarray:
    """Dispatch on extension: .ppm, .pam or .dft1 -> (1,h,w,c) float32."""
    p = str(path)
    if p.endswith(".ppm"):
        return read_ppm(p)
    if p.endswith(".pam"):
        return read_pam(p)
    if p.endswith(".dft1"):
        return load_dft1(p)
    raise ImageFormatError(f"{p}: unsupported extension (use .ppm/.pam/.dft1)")


def save_image(path, x: np.ndarray) -> None:
    p = str(path)
    if p.endswith(".ppm"):
        write_ppm(p, x)
    elif p.endswith(".pam"):
        write_pam(p, x)
    elif p.endswith(".dft1"):
        save_dft1(p, x)
    else:
        raise ImageFormatError(f"{p}: unsupported extension (use .ppm/.pam/.dft1)")
