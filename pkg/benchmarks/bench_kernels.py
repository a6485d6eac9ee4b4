"""Compare the compiled and pure-Python BLS12-381 kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--msm-size M]

Times MSM in G1 and G2, a four-term pairing check, and Groth16 setup,
prove and verify on the threshold circuit. Prints one row per operation.
"""

import argparse
import random
import statistics
import time

from zkpfedeval import curve
from zkpfedeval.protocol import threshold_circuit
from zkpfedeval.zk import Groth16Backend


def timed(fn, repeat):
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def bench(k, repeat, msm_size):
    rng = random.Random(0)
    r = int(k.SCALAR_MODULUS)
    scalars = [rng.randrange(r) for _ in range(msm_size)]
    g1s = k.g1_batch_mul(k.G1.generator(), scalars)
    g2s = k.g2_batch_mul(k.G2.generator(), scalars[:8])
    a, b = rng.randrange(r), rng.randrange(r)
    p1 = [k.G1.generator() * a, -(k.G1.generator() * (a * b % r)), k.G1.generator(), -k.G1.generator()]
    p2 = [k.G2.generator() * b, k.G2.generator(), k.G2.generator(), k.G2.generator()]

    circuit = threshold_circuit()
    backend = Groth16Backend(k)
    pub = [1, 2, 500000, 3]
    witness = circuit.witness(1234, pub)
    pk, vk = backend.setup(circuit.cs, rng_seed=1)
    proof = backend.prove(pk, pub, witness)
    assert backend.verify(vk, pub, proof)

    return {
        f"g1 msm ({msm_size})": timed(lambda: k.g1_msm(g1s, scalars), repeat),
        "g2 msm (8)": timed(lambda: k.g2_msm(g2s, scalars[:8]), repeat),
        "pairing check (4)": timed(lambda: k.pairing_check(p1, p2), repeat),
        "groth16 setup": timed(lambda: backend.setup(circuit.cs, rng_seed=1), max(1, repeat // 3)),
        "groth16 prove": timed(lambda: backend.prove(pk, pub, witness), repeat),
        "groth16 verify": timed(lambda: backend.verify(vk, pub, proof), repeat),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--msm-size", type=int, default=64)
    args = ap.parse_args()

    results = {name: bench(curve.load(name), args.repeat, args.msm_size) for name in curve.available()}
    names = list(results)
    print(f"{'operation':<22}" + "".join(f"{n:>14}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for op in results[names[0]]:
        row = f"{op:<22}" + "".join(f"{results[n][op] * 1e3:>11.2f} ms" for n in names)
        if len(names) == 2:
            row += f"{results['python'][op] / results['native'][op]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
