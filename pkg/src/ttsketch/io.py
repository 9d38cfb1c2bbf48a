"""Binary serialization for tensor trains.

Layout (all integers little-endian):

  magic   4 bytes  b"TTF1"
  field   u8       0 = real, 1 = complex
  d       u32
  dims    d  x u32
  ranks   d+1 x u32
  cores   f64 payload, core by core, row-major (r_prev, n, r_next);
          complex cores store interleaved (re, im) per entry

Readers must reject wrong magic and inconsistent rank chains.
"""

import json
import struct

import numpy as np

from .tt import TensorTrain

MAGIC = b"TTF1"


def write_tt(path, x):
    field_flag = 1 if x.field == "complex" else 0
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<B", field_flag))
        f.write(struct.pack("<I", x.d))
        f.write(struct.pack("<%dI" % x.d, *x.dims))
        f.write(struct.pack("<%dI" % (x.d + 1), *x.ranks))
        for c in x.cores:
            a = np.ascontiguousarray(c)
            if field_flag:
                buf = np.empty(a.shape + (2,))
                buf[..., 0] = a.real
                buf[..., 1] = a.imag
                f.write(buf.astype("<f8").tobytes())
            else:
                f.write(a.astype("<f8").tobytes())


def read_tt(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise ValueError("bad magic, not a TTF1 file")
    off = 4
    (field_flag,) = struct.unpack_from("<B", data, off)
    off += 1
    if field_flag not in (0, 1):
        raise ValueError("bad field flag %d" % field_flag)
    (d,) = struct.unpack_from("<I", data, off)
    off += 4
    if d == 0:
        raise ValueError("empty train")
    dims = struct.unpack_from("<%dI" % d, data, off)
    off += 4 * d
    ranks = struct.unpack_from("<%dI" % (d + 1), data, off)
    off += 4 * (d + 1)
    cores = []
    per_entry = 16 if field_flag else 8
    for k in range(d):
        count = ranks[k] * dims[k] * ranks[k + 1]
        nbytes = count * per_entry
        if off + nbytes > len(data):
            raise ValueError("truncated core payload at core %d" % k)
        raw = np.frombuffer(data, dtype="<f8", count=count * (2 if field_flag else 1), offset=off)
        off += nbytes
        if field_flag:
            raw = raw.reshape(-1, 2)
            c = raw[:, 0] + 1j * raw[:, 1]
        else:
            c = raw
        cores.append(c.reshape(ranks[k], dims[k], ranks[k + 1]))
    if off != len(data):
        raise ValueError("trailing bytes after last core")
    return TensorTrain(cores)


def tt_to_json_obj(x):
    obj = {
        "field": x.field,
        "dims": list(x.dims),
        "ranks": list(x.ranks),
    }
    if x.field == "complex":
        obj["cores_re"] = [np.asarray(c).real.tolist() for c in x.cores]
        obj["cores_im"] = [np.asarray(c).imag.tolist() for c in x.cores]
    else:
        obj["cores"] = [np.asarray(c).tolist() for c in x.cores]
    return obj


def tt_from_json_obj(obj):
    if obj.get("field") == "complex":
        cores = [
            np.asarray(re) + 1j * np.asarray(im)
            for re, im in zip(obj["cores_re"], obj["cores_im"])
        ]
    else:
        cores = [np.asarray(c, dtype=float) for c in obj["cores"]]
    return TensorTrain(cores)


def write_tt_json(path, x):
    with open(path, "w") as f:
        json.dump(tt_to_json_obj(x), f)


def read_tt_json(path):
    with open(path) as f:
        return tt_from_json_obj(json.load(f))
