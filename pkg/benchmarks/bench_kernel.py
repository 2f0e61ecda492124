"""Compare the compiled and numpy kernels on batch model evaluation.

Builds a random layered model, then times ``evaluate_rows`` on a batch of
random interventions with each available backend. Also times a full actual
cause enumeration on the same model under each backend.

    python3 benchmarks/bench_kernel.py --endo 10 --rows 16 256 4096 50000

The witness search issues many small batches (one per candidate partition),
so the small-batch rows are the ones that matter for training.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from moralrl import kernel
from moralrl.dsl import parse_model
from moralrl.kernel import CompiledModel


def layered_model(n_endo: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    lines = ["exo U0 in {0,1,2,3};", "exo U1 in {0,1,2,3};"]
    names = ["U0", "U1"]
    eqs = []
    for i in range(n_endo):
        v = f"V{i}"
        lines.append(f"endo {v} in {{0,1,2,3}};")
        a, b = rng.choice(names, size=2, replace=len(names) < 2)
        op = rng.choice(["max({a}, {b})", "min({a}, {b})", "if({a} > {b}, {a}, {b})",
                         "max({a} - 1, 0)", "min({a} + indicator({b} == 2), 3)"])
        eqs.append(f"{v} := {op.format(a=a, b=b)};")
        names.append(v)
    return "\n".join(lines + eqs) + "\n"


def time_enumeration(n_endo, seed):
    """Run the enumeration in fresh interpreters so each backend is selected at import."""
    code = (
        "import time; from moralrl.dsl import parse_model; from moralrl.causes import enumerate_actual_causes;"
        "from moralrl.scm import PrimitiveEvent, evaluate; import sys; sys.path.insert(0, 'benchmarks');"
        "from bench_kernel import layered_model;"
        f"m = parse_model(layered_model({n_endo}, {seed})); u = {{'U0': 3, 'U1': 1}};"
        f"out = 'V{n_endo - 1}'; phi = PrimitiveEvent(out, evaluate(m, u)[out]);"
        "t0 = time.perf_counter(); enumerate_actual_causes(m, u, phi); print(time.perf_counter() - t0)"
    )
    out = {}
    for name in kernel.backends():
        env = dict(os.environ, MORALRL_PURE_PYTHON="1" if name == "python" else "0")
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[name] = float(res.stdout.strip())
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--endo", type=int, default=10)
    ap.add_argument("--rows", type=int, nargs="+", default=[16, 256, 4096, 50_000])
    ap.add_argument("--enum-endo", type=int, default=6, help="model size for the enumeration timing")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-enumeration", action="store_true")
    args = ap.parse_args()

    model = parse_model(layered_model(args.endo, args.seed))
    rng = np.random.default_rng(args.seed)
    n = len(model.variables)
    context = {"U0": 3, "U1": 1}
    impls = kernel.backends()
    print(f"model: {args.endo} endogenous variables (best of {args.repeat})")
    print(f"  {'rows':>7} " + " ".join(f"{name + ' ms':>12}" for name in impls) + "   speedup")
    for rows in args.rows:
        mask = (rng.random((rows, n)) < 0.2).astype(np.uint8)
        mask[:, :2] = 0
        forced = rng.integers(0, 4, size=(rows, n)).astype(np.int64)
        # small batches are timed in a loop so the clock resolution does not matter
        loops = max(1, 20_000 // rows)
        times, outputs = {}, {}
        for name, impl in impls.items():
            cm = CompiledModel(model, impl)
            outputs[name] = cm.evaluate_rows(context, mask, forced, check_ranges=False)
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                for _ in range(loops):
                    cm.evaluate_rows(context, mask, forced, check_ranges=False)
                best = min(best, (time.perf_counter() - t0) / loops)
            times[name] = best
        ref = outputs["python"]
        assert all(np.array_equal(ref, o) for o in outputs.values()), "backends disagree"
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else "       -"
        print(f"  {rows:>7} " + " ".join(f"{t * 1e3:12.4f}" for t in times.values()) + f"  {speed}")
    if not args.no_enumeration:
        enum = time_enumeration(args.enum_endo, args.seed)
        print(f"enumerate_actual_causes on a {args.enum_endo}-variable model:")
        for name, t in enum.items():
            print(f"  {name:<7} {t:8.3f} s")


if __name__ == "__main__":
    main()
