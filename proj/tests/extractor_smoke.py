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

"""Packs written by the Python exporter pass the C++ inspect-pack check."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "extractor"))
import omama_extract as ox  # noqa: E402


def square(h, w, x0, y0, x1, y1):
    return [[1 if x0 <= x <= x1 and y0 <= y <= y1 else 0 for x in range(w)] for y in range(h)]


def main():
    cli = sys.argv[1]
    fmap = [[[0.25 * (x + y) + c for c in range(3)] for x in range(3)] for y in range(2)]
    src = square(8, 12, 1, 1, 4, 4)
    cands = [square(8, 12, 0, 0, 2, 2), square(8, 12, 5, 3, 9, 7)]
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "smoke.ommp"
        path.write_bytes(ox.encode_pack("Exo2Ego", fmap, fmap, src, cands, gt_index=1, gt_mask=cands[1]))
        out = subprocess.run([cli, "inspect-pack", "--json", str(path)], capture_output=True, text=True)
        if out.returncode != 0:
            print(out.stderr)
            return 1
        info = json.loads(out.stdout)
        want = {"direction": "Exo2Ego", "dim": 3, "candidates": 2, "gt_index": 1, "gt_mask": True,
                "source_mask_pixels": 16}
        bad = {k: info.get(k) for k, v in want.items() if info.get(k) != v}
        if bad:
            print("unexpected fields:", bad)
            return 1

        jobs = Path(tmp) / "jobs.json"
        jobs.write_text(json.dumps([{"source_image": "a.png", "dest_image": "b.png", "direction": "Ego2Exo",
                                     "source_mask": "m.png", "output": "p.ommp"}]))
        if ox.main(["--pairs", str(jobs), "--out", tmp]) != 2:
            print("missing weights should exit 2")
            return 1
    print("extractor smoke: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
