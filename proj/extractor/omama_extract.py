# Licensed under the Apache License, Version 2.0 (the "License"); you
# may not use this file except in compliance with the License.  You
# may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.  See the License for the specific language governing
# permissions and limitations under the License.

"""Image-pair to .ommp feature pack exporter (interface stub).

The pack writer is complete and matches the C++ reader.  The backbone and
mask-proposal stages are not bundled: ``extract`` validates the jobs file,
then exits 2 unless local model weights are configured.
"""

import argparse
import json
import math
import struct
import sys
from pathlib import Path

MASK_SCALE = 4
PACK_VERSION = 1
DIRECTIONS = {"Ego2Exo": 0, "Exo2Ego": 1}
JOB_KEYS = {"source_image", "dest_image", "direction", "source_mask", "output"}


def encode_rle(mask):
    """Row-wise alternating runs, background first; `mask` is a list of rows of 0/1."""
    runs = []
    for row in mask:
        value, length = 0, 0
        for px in row:
            px = 1 if px else 0
            if px == value:
                length += 1
            else:
                runs.append(length)
                value, length = px, 1
        runs.append(length)
    return struct.pack("<I", len(runs)) + struct.pack(f"<{len(runs)}I", *runs)


def _features(fmap):
    h, w, d = len(fmap), len(fmap[0]), len(fmap[0][0])
    flat = [float(v) for row in fmap for px in row for v in px]
    if any(not math.isfinite(v) for v in flat):
        raise ValueError("feature map holds non-finite values")
    return (h, w, d), struct.pack(f"<{len(flat)}f", *flat)


def _check_grid(mask, h, w, what):
    if len(mask) != h * MASK_SCALE or any(len(r) != w * MASK_SCALE for r in mask):
        raise ValueError(f"{what} must be {h * MASK_SCALE}x{w * MASK_SCALE}")


def encode_pack(direction, source_features, dest_features, source_mask, candidates,
                gt_index=None, gt_mask=None, visible=True):
    """Serializes one sample; feature maps are H x W x d nested sequences."""
    (hs, ws, d), src = _features(source_features)
    (hd, wd, dd), dst = _features(dest_features)
    if d != dd:
        raise ValueError("source and destination feature widths differ")
    if not visible and (gt_index is not None or gt_mask is not None):
        raise ValueError("an invisible sample carries no ground truth")
    if gt_index is not None and not 0 <= gt_index < len(candidates):
        raise ValueError("gt_index out of range")
    _check_grid(source_mask, hs, ws, "source mask")
    for m in candidates + ([gt_mask] if gt_mask is not None else []):
        _check_grid(m, hd, wd, "destination mask")
    flags = (1 if visible else 0) | (2 if gt_index is not None else 0) | (4 if gt_mask is not None else 0)
    out = bytearray(b"OMMP")
    out += struct.pack("<HBHHHHHHB", PACK_VERSION, DIRECTIONS[direction], d, hs, ws, hd, wd, len(candidates), flags)
    out += src + dst + encode_rle(source_mask)
    for m in candidates:
        out += encode_rle(m)
    if gt_index is not None:
        out += struct.pack("<H", gt_index)
    if gt_mask is not None:
        out += encode_rle(gt_mask)
    return bytes(out)


def load_jobs(path):
    jobs = json.loads(Path(path).read_text())
    if not isinstance(jobs, list):
        raise ValueError("jobs file must hold a JSON array")
    for i, job in enumerate(jobs):
        missing = JOB_KEYS - job.keys()
        if missing:
            raise ValueError(f"job {i} lacks {sorted(missing)}")
        if job["direction"] not in DIRECTIONS:
            raise ValueError(f"job {i}: direction must be Ego2Exo or Exo2Ego")
    return jobs


def main(argv=None):
    ap = argparse.ArgumentParser(prog="extract", description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", required=True, help="jobs.json (see docs/formats.md)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--max-candidates", type=int, default=64)
    ap.add_argument("--deterministic", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--weights", help="JSON naming local backbone and proposal weights")
    args = ap.parse_args(argv)
    try:
        jobs = load_jobs(args.pairs)
    except (OSError, ValueError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 1
    if not args.weights or not Path(args.weights).is_file():
        print(f"error: no model weights configured for {len(jobs)} job(s); pass --weights with local "
              "backbone and proposal checkpoints (nothing is downloaded)", file=sys.stderr)
        return 2
    print("error: the feature backbone stage is not bundled with this repository", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
