"""Export loss-landscape grids for a small-batch and a large-batch model
trained on the same data, each with its mu_max and sharpness.

    python3 scripts/landscape_pair.py --out-dir landscapes
"""
import argparse
import json
import os

from ahsc import convexity, data, hpo, nn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=data.bundled("iris.csv"))
    ap.add_argument("--out-dir", default="landscapes")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid-n", type=int, default=21)
    ap.add_argument("--span", type=float, default=1.0)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()

    ds = data.load_csv(args.data)
    train, _ = data.split(ds, 0.2, args.seed)
    train, _, _ = data.standardize(train)
    os.makedirs(args.out_dir, exist_ok=True)
    for tag, bs in (("small_batch", 4), ("large_batch", train.m)):
        cfg = hpo.HyperConfig(0, 2, 64, bs, 1e-2)
        model = nn.init_model(cfg.layer_dims(train.n, train.k), args.seed)
        model, hist = nn.train(model, train, cfg, args.epochs, seed=args.seed)
        grid = convexity.landscape_slice(model, train, args.grid_n, args.span, args.seed)
        path = os.path.join(args.out_dir, f"{tag}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x_index,y_index,loss\n")
            fh.writelines(f"{i},{j},{v!r}\n" for i, j, v in grid.rows())
        side = {
            "batch_size": bs,
            "train_accuracy": hist.accuracy[-1] if hist.accuracy else None,
            "mu_max": convexity.mu_max(model, train, bs).mu_max,
            "sharpness": convexity.model_sharpness(model, train, convexity.SharpnessParams(epsilon=1e-3)),
        }
        with open(path + ".json", "w", encoding="utf-8") as fh:
            json.dump(side, fh, sort_keys=True)
        print(tag, json.dumps(side, sort_keys=True))


if __name__ == "__main__":
    main()
