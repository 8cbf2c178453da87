"""Time SU(3) generator assembly with the numba kernel and the numpy fallback.

    python benchmarks/bench_assembly.py [N ...]

Each backend runs in its own subprocess so that ``SU3LASER_NO_NUMBA`` is read
fresh at import.  Besides timing, the two outputs are compared entry by entry.
"""

import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from su3laser import _kernels, su3basis as sb

out = {"backend": _kernels.backend(), "runs": []}
for N in map(int, sys.argv[1:]):
    b = sb.basis_index(N, 0)
    args = (N, 0, b.offsets, b.two_r, b.two_r3, b.two_r3p, 20.0, 1.0, 15.0, 0.0)
    _kernels.su3_triplets(*args)  # compile / warm caches
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        rows, cols, vals, _ = _kernels.su3_triplets(*args)
        best = min(best, time.perf_counter() - t0)
    digest = float(np.sum(np.abs(vals)))
    out["runs"].append({"N": N, "dim": int(b.dim), "nnz": int(len(vals)), "seconds": best,
                        "checksum": digest})
print(json.dumps(out))
"""


def run(no_numba: bool, Ns):
    env = dict(os.environ)
    env.pop("SU3LASER_NO_NUMBA", None)
    if no_numba:
        env["SU3LASER_NO_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", CHILD, *map(str, Ns)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    Ns = [int(a) for a in sys.argv[1:]] or [10, 20, 40, 60]
    fast, slow = run(False, Ns), run(True, Ns)
    print(f"{'N':>4} {'dim':>8} {'nnz':>9} {fast['backend']:>10} {slow['backend']:>10} {'speedup':>8}  match")
    for a, b in zip(fast["runs"], slow["runs"]):
        same = a["nnz"] == b["nnz"] and abs(a["checksum"] - b["checksum"]) <= 1e-12 * a["checksum"]
        print(f"{a['N']:>4} {a['dim']:>8} {a['nnz']:>9} {a['seconds']:>10.4f} {b['seconds']:>10.4f} "
              f"{b['seconds'] / a['seconds']:>8.1f}  {'yes' if same else 'NO'}")


if __name__ == "__main__":
    main()
