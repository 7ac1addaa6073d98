"""Writes the golden SATD fixtures with Python's struct module, independently
of the Rust writer. Run from this directory; the outputs are checked in."""

import json
import struct


def dump(path, name, dims, values):
    raw = name.encode("utf-8")
    out = b"SATD" + struct.pack("<HH", 1, len(raw)) + raw
    out += struct.pack("<B", len(dims)) + struct.pack("<%dI" % len(dims), *dims)
    out += struct.pack("<B", 0) + struct.pack("<%df" % len(values), *values)
    with open(path, "wb") as f:
        f.write(out)


flat = [0.0, 1.5, -2.0, 3.25, -0.0, 1e-3]
dump("flat_fc1.satd", "fc1", [2, 3], flat)

conv = [i * 0.5 - 3.0 for i in range(2 * 3 * 2 * 2)]
dump("conv_l01.satd", "l01.conv", [2, 3, 2, 2], conv)

with open("values.json", "w") as f:
    json.dump({"flat_fc1": flat, "conv_l01": conv}, f, indent=2)
    f.write("\n")

with open("labels.txt", "w") as f:
    f.write("0\n1\n")

manifest = {
    "format": "SATD",
    "version": 1,
    "capture": "post-activation",
    "labels": "labels.txt",
    "layers": [
        {"name": "l01.conv", "file": "conv_l01.satd", "kind": "conv"},
        {"name": "fc1", "file": "flat_fc1.satd", "kind": "dense"},
    ],
}
with open("manifest.json", "w") as f:
    json.dump(manifest, f, indent=2)
    f.write("\n")
