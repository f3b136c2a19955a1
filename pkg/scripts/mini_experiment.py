"""Run the 8-category glyph experiment end to end and print mean precision per ladder step."""
import argparse
import logging

from sketchrec.mini_experiment import MiniConfig, run_mini_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="runs/mini")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    result = run_mini_experiment(args.workdir, MiniConfig(seed=args.seed), threads=args.threads)
    for plan in result.reports:
        means = result.report(plan).means
        print(plan, " ".join(f"t={t}:{m:.3f}" for t, m in means.items()))


if __name__ == "__main__":
    main()
