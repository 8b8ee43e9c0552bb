"""Regenerate tests/fixtures/golden_prf.json.

Written against hashlib only, so the fixtures do not depend on the package
code they pin down.
"""

import hashlib
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "golden_prf.json"

KEYS = {
    "zero": bytes(32),
    "ramp": bytes(range(32)),
    "seed0": hashlib.sha256(b"\x04" + (0).to_bytes(8, "big")).digest(),
}


def phase_bit(key, bits):
    n = len(bits)
    nbytes = math.ceil(n / 8)
    packed = bytearray(nbytes)
    for i, b in enumerate(bits):
        if b == "1":
            packed[i // 8] |= 0x80 >> (i % 8)
    digest = hashlib.sha256(key + b"\x01" + n.to_bytes(2, "big") + bytes(packed)).digest()
    return digest[31] & 1


def schedule(key, T):
    names = "IXYZ"
    return "".join(
        names[hashlib.sha256(key + b"\x02" + i.to_bytes(4, "big")).digest()[0] % 4]
        for i in range(1, T + 1)
    )


def angle(key, instance, layer, qubit, tag):
    d = hashlib.sha256(
        key + b"\x03" + instance.to_bytes(4, "big") + layer.to_bytes(4, "big")
        + qubit.to_bytes(4, "big") + tag
    ).digest()
    return 2 * math.pi * int.from_bytes(d[:8], "big") / 2.0**64


def main():
    doc = {"keys": {name: k.hex() for name, k in KEYS.items()}, "gen_trapdoor": {}, "phase_bits": [],
           "schedules": [], "angles": []}
    for seed in (0, 1, 2**64 - 1):
        doc["gen_trapdoor"][str(seed)] = hashlib.sha256(b"\x04" + seed.to_bytes(8, "big")).hexdigest()
    for name, key in KEYS.items():
        for y in ("000000", "101101", "1", "0", "10110011", "101100111", "11111111111111"):
            doc["phase_bits"].append({"key": name, "y": y, "bit": phase_bit(key, y)})
        doc["phase_bits"].append({"key": name, "y": "all_n6",
                                  "bits": "".join(str(phase_bit(key, format(v, "06b"))) for v in range(64))})
        doc["schedules"].append({"key": name, "T": 16, "schedule": schedule(key, 16)})
        for layer in range(2):
            for q in range(3):
                doc["angles"].append({"key": name, "instance": 0, "layer": layer, "qubit": q,
                                      "alpha": angle(key, 0, layer, q, b"Y"),
                                      "beta": angle(key, 0, layer, q, b"Z")})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
