"""Write a synthetic glyph corpus as ``<out>/<category>/<index>.pgm``."""
import argparse

from sketchrec.synthetic import write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--categories", type=int, default=8)
    ap.add_argument("--per-category", type=int, default=56)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--jitter", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    root = write_corpus(args.out, args.categories, args.per_category, args.size, args.seed, args.jitter)
    print(f"wrote {args.categories * args.per_category} glyphs to {root}")


if __name__ == "__main__":
    main()
