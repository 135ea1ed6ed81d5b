"""Threshold-accepting search on a few shapes, reporting the gap to the lower bound."""
import argparse
import time

from stratdisc.search import SearchConfig, minimize_phi_sd
from stratdisc.weights import parse_weights

SHAPES = [(4, 3, 2, 2), (8, 7, 2, 3), (9, 4, 3, 2), (9, 8, 3, 2), (16, 5, 4, 2), (18, 6, 3, 2)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--weights", default="constant")
    args = ap.parse_args()
    cfg = SearchConfig(iterations=args.iters, restarts=args.restarts, seed=args.seed)
    print(f"{'shape':<16}{'best Phi_SD':>14}{'lower bound':>14}{'gap':>12}{'iters':>9}{'secs':>7}")
    for shape in SHAPES:
        w = parse_weights(args.weights, shape[2], shape[3])
        t0 = time.perf_counter()
        res = minimize_phi_sd(shape, w, cfg)
        print(f"{str(shape):<16}{res.phi:14.6f}{res.phi_lb:14.6f}{res.gap:12.2e}{res.iterations:9d}"
              f"{time.perf_counter() - t0:7.2f}")


if __name__ == "__main__":
    main()
