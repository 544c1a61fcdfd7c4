"""Run the full pipeline over a seeded random corpus and tabulate by shape."""
import argparse
import collections
import time

from coiso.pipeline import SimulationConfig, run_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--simulate", default=None, help='e.g. "dt=0.01,steps=500"')
    args = ap.parse_args()

    sim = SimulationConfig.parse(args.simulate) if args.simulate else None
    t0 = time.perf_counter()
    res = run_corpus(args.count, args.seed, sim, workers=args.workers)
    elapsed = time.perf_counter() - t0

    by_shape = collections.defaultdict(lambda: [0, 0])
    for m in res["members"]:
        cell = by_shape[(m["dim"], m["kernel_dim"])]
        cell[0] += 1
        cell[1] += m["passed"]
    print(f"{'dim':>4} {'kernel':>6} {'runs':>5} {'passed':>6}")
    for (n, k), (runs, ok) in sorted(by_shape.items()):
        print(f"{n:>4} {k:>6} {runs:>5} {ok:>6}")
    for m in res["members"]:
        if not m["passed"]:
            print(f"seed {m['seed']}: failed {m['failed_stages']}")
    print(f"{res['count']} systems in {elapsed:.2f} s, {'all passed' if res['passed'] else 'FAILURES'}")
    return 0 if res["passed"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
