"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row times one call on a realistic input (one second of 16 kHz audio,
a ten-word transcript pair) and checks that both backends agree.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from eongp import kernels
from eongp.audio import AudioClip
from eongp.spectral import notch_filter


def cases(rng):
    x = rng.uniform(-0.5, 0.5, 16000)
    ref = rng.integers(0, 50, 10).astype(np.int64)
    hyp = rng.integers(0, 50, 12).astype(np.int64)
    clip = AudioClip(x, 16000)
    return {
        "biquad (16k samples)": lambda m: m.biquad(x, 0.9, -1.8, 0.9, -1.79, 0.81, 0.0, 0.0)[0],
        "levenshtein (10x12 tokens)": lambda m: m.levenshtein(ref, hyp),
        "goertzel (16k samples)": lambda m: m.goertzel_power(x, 1000.0, 16000.0),
        "notch_filter, 3 tones": lambda m: _with_backend(m, lambda: notch_filter(clip, [400.0, 1300.0, 2900.0]).samples),
    }


def _with_backend(module, fn):
    saved = kernels._impl
    kernels._impl = module
    try:
        return fn()
    finally:
        kernels._impl = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this file")
    args = parser.parse_args(argv)

    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled backend not built; only the Python fallback is available", file=sys.stderr)
    rows = []
    for name, fn in cases(np.random.default_rng(0)).items():
        outs = {b: fn(m) for b, m in mods.items()}
        ref = outs["python"]
        agree = all(np.allclose(v, ref, rtol=1e-9, atol=1e-9) for v in outs.values())
        times = {}
        for b, m in mods.items():
            number = 3 if b == "python" else 50
            best = min(timeit.repeat(lambda: fn(m), number=number, repeat=args.repeat)) / number
            times[b] = best
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        rows.append({"case": name, **{f"{b}_s": t for b, t in times.items()}, "speedup": speedup, "agree": agree})

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'python (ms)':>12}  {'cython (ms)':>12}  {'speedup':>8}  agree")
    for r in rows:
        cy = r.get("cython_s")
        print(
            f"{r['case']:<{width}}  {r['python_s'] * 1e3:12.3f}  "
            f"{(cy * 1e3 if cy else float('nan')):12.3f}  {r['speedup']:8.1f}  {r['agree']}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backend_default": kernels.BACKEND, "rows": rows}, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
