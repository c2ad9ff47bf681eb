"""Checkpoint files: an 8-byte little-endian header length, a JSON header, then raw
float32 little-endian parameter arrays in header order."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import Network

FORMAT_VERSION = 1
MAGIC = b"DCNFCKPT"


def save_checkpoint(path, networks: dict[str, Network], meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = []
    entries = {}
    # the header is written with sorted keys, so arrays follow sorted network names
    for name, net in sorted(networks.items()):
        plist = []
        for k, v in net.params.items():
            plist.append({"name": k, "shape": list(v.shape)})
            arrays.append(np.ascontiguousarray(v, dtype="<f4"))
        entries[name] = {"graph": net.graph(), "params": plist}
    header = {"format_version": FORMAT_VERSION, "networks": entries, "meta": meta or {}}
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hb)))
        fh.write(hb)
        for a in arrays:
            fh.write(a.tobytes())
    return path


def load_checkpoint(path) -> tuple[dict[str, Network], dict]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path} is not a checkpoint")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError("unsupported checkpoint version")
        nets = {}
        for name, entry in header["networks"].items():
            net = Network.from_graph(entry["graph"])
            values = {}
            for p in entry["params"]:
                count = int(np.prod(p["shape"])) if p["shape"] else 1
                values[p["name"]] = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(p["shape"])
            net.load_params(values)
            nets[name] = net
    return nets, header["meta"]
