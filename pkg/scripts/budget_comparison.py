"""Epoch budget and held-out score of the convexity-ranked search against random search, over several seeds.

    python3 scripts/budget_comparison.py --data src/ahsc/datasets/iris.csv --seeds 0 1 2
"""
import argparse
import statistics

from ahsc import data, hpo, metrics, nn


def run(ds, seed, n1, n2, epochs):
    train, test = data.split(ds, 0.2, seed)
    train, test, _ = data.standardize(train, test)
    space = hpo.HyperSpace()
    rows = []
    for name, res in (
        ("convexity", hpo.ahsc(space, train, n1=n1, n2=n2, seed=seed, epochs_full=epochs)),
        ("random", hpo.random_search(space, train, n=n1, seed=seed, epochs_full=epochs)),
    ):
        acc = metrics.accuracy(nn.predict_proba(res.best_model, test.features), test.labels)
        rows.append((name, seed, res.budget_epochs, res.wall_seconds, acc))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--data", default=data.bundled("iris.csv"))
    src.add_argument("--synthetic")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--n1", type=int, default=20)
    ap.add_argument("--n2", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()
    ds = data.parse_synthetic(args.synthetic) if args.synthetic else data.load_csv(args.data)

    rows = [r for s in args.seeds for r in run(ds, s, args.n1, args.n2, args.epochs)]
    print(f"{'method':<10} {'seed':>4} {'epochs':>7} {'seconds':>8} {'test_acc':>8}")
    for name, seed, budget, secs, acc in rows:
        print(f"{name:<10} {seed:>4} {budget:>7} {secs:>8.2f} {acc:>8.3f}")
    for name in ("convexity", "random"):
        mine = [r for r in rows if r[0] == name]
        print(f"median {name:<10} epochs {statistics.median(r[2] for r in mine):>6}"
              f"  seconds {statistics.median(r[3] for r in mine):.2f}  test_acc {statistics.median(r[4] for r in mine):.3f}")
    conv = statistics.median(r[3] for r in rows if r[0] == "convexity")
    rand = statistics.median(r[3] for r in rows if r[0] == "random")
    print(f"runtime ratio (convexity / random): {conv / rand:.2f}")


if __name__ == "__main__":
    main()
