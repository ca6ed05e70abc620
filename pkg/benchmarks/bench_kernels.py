"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Shapes mirror training: batches of 16 sentences, 128 channels, a few hundred
frames. Each kernel is run on identical inputs under both backends and the
outputs are checked to agree before timing.
"""

import argparse
import timeit

import numpy as np
from threadpoolctl import threadpool_limits

from phqnet.numerics import backend


def cases(rng, dtype=np.float32):
    B, T, H, k = 16, 300, 128, 5
    x = rng.standard_normal((B, T, H)).astype(dtype)
    w = (rng.standard_normal((k, H, H)) / np.sqrt(k * H)).astype(dtype)
    b = np.zeros(H, dtype)
    gy = rng.standard_normal((B, T, H)).astype(dtype)
    xw = rng.standard_normal((B, T, 4 * H)).astype(dtype)
    u = (rng.standard_normal((H, 4 * H)) / np.sqrt(H)).astype(dtype)
    return {
        "conv_forward d=1": lambda kn: kn.conv_forward(x, w, b, 1),
        "conv_forward d=64": lambda kn: kn.conv_forward(x, w, b, 64),
        "conv_backward d=8": lambda kn: kn.conv_backward(x, w, gy, 8),
        "lstm_forward": lambda kn: kn.lstm_forward(xw, u),
        "conv stack (10 layers)": lambda kn: [kn.conv_forward(x, w, b, 2**i) for i in range(10)],
    }


def _flat(out):
    if isinstance(out, (tuple, list)):
        return np.concatenate([_flat(o) for o in out])
    return np.ravel(out)


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    names = backend.available()
    kernels = {n: backend.get(n) for n in names}
    if "compiled" not in names:
        print("compiled extension not built; timing the numpy fallback only")
    table = cases(np.random.default_rng(0))
    print(f"{'kernel':<26}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    with threadpool_limits(limits=1):
        for label, fn in table.items():
            outs = [_flat(fn(kernels[n])) for n in names]
            for o in outs[1:]:
                np.testing.assert_allclose(o, outs[0], rtol=1e-4, atol=1e-4)
            times = [min(timeit.repeat(lambda: fn(kernels[n]), number=1, repeat=args.repeat)) for n in names]
            row = f"{label:<26}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
            if len(times) == 2:
                row += f"{times[1] / times[0]:>11.2f}x"
            print(row)


if __name__ == "__main__":
    main()
