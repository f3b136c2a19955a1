"""Fetch the MNIST IDX files into a directory (default: data/mnist).

The files come from the ``MNIST_dir`` 0.2.0 wheel on PyPI. pip refuses to
install that wheel (its dist-info is nested), so it is downloaded and
unpacked directly.
"""
import argparse
import shutil
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

URL = ("https://files.pythonhosted.org/packages/5c/42/504919bf729ad48c424afee77c993f727add4b333b3941125ad657a5c445/"
       "MNIST_dir-0.2.0-py3-none-any.whl")
NAMES = ["train-images.idx3-ubyte", "train-labels.idx1-ubyte", "t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/mnist")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = Path(tmp) / "mnist.whl"
        urllib.request.urlretrieve(URL, wheel)
        with zipfile.ZipFile(wheel) as zf:
            for member in zf.namelist():
                name = Path(member).name
                if name in NAMES:
                    with zf.open(member) as src, open(out / name, "wb") as dst:
                        shutil.copyfileobj(src, dst)
    missing = [n for n in NAMES if not (out / n).exists()]
    if missing:
        sys.exit(f"wheel did not contain {missing}")
    print(f"MNIST written to {out}")


if __name__ == "__main__":
    main()
