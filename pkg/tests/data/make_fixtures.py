"""Regenerate the bitstream fixtures. Only run deliberately: the tests treat
the committed files as frozen references.

    python3 tests/data/make_fixtures.py --force
"""

import struct
import sys
from pathlib import Path

import numpy as np

from adaradar.bitstream import serialize_frame
from adaradar.codec import encode_frame
from adaradar.tensor import RadarTensor, read_rdt, write_rdt

HERE = Path(__file__).parent
CASES = {  # name: (shape, M, s, r, seed)
    "small": ((2, 4, 4), 2, 4, 2.0, 11),
    "medium": ((2, 8, 8), 4, 8, 3.0, 12),
    "large": ((4, 16, 16), 8, 6, 5.5, 13),
}


def main():
    if "--force" not in sys.argv:
        sys.exit("refusing to overwrite frozen fixtures without --force")
    for name, (shape, M, s, r, seed) in CASES.items():
        rng = np.random.default_rng(seed)
        write_rdt(RadarTensor(rng.normal(0, 3, shape).astype(np.float32)), HERE / f"{name}.rdt")
        x = read_rdt(HERE / f"{name}.rdt")
        (HERE / f"{name}.arf").write_bytes(serialize_frame(encode_frame(x, r, s, M, frame_id=seed)))

    good = (HERE / "small.arf").read_bytes()
    (HERE / "bad_magic.arf").write_bytes(b"ARFX" + good[4:])
    (HERE / "truncated.arf").write_bytes(good[:-3])
    # M=2: the 4-bit bitmap is padded to a byte; setting a pad bit names index 4
    hdr = struct.calcsize("<4sHHBHIIfQ")
    bad = bytearray(good)
    bad[hdr + 4] |= 0x01
    (HERE / "bad_index.arf").write_bytes(bytes(bad))
    # s=4 code 0b1000 = -8 is outside [-7, 7]
    bad = bytearray(good)
    bad[hdr + 5] = 0x80 | (bad[hdr + 5] & 0x0F)
    (HERE / "bad_code.arf").write_bytes(bytes(bad))


if __name__ == "__main__":
    main()
