from sketchrec.sketch_io.corpus import (
    DEFAULT_RESOLUTION,
    Corpus,
    Sketch,
    binarize,
    ink_to_pgm,
    load_corpus,
    preprocess,
    select_subset,
)
from sketchrec.sketch_io.idx import load_idx, load_idx_arrays, load_mnist
from sketchrec.sketch_io.pnm import decode_pgm, decode_pnm, encode_pgm, encode_pnm, encode_ppm
from sketchrec.sketch_io.resample import resize

__all__ = [
    "DEFAULT_RESOLUTION",
    "Corpus",
    "Sketch",
    "binarize",
    "decode_pgm",
    "decode_pnm",
    "encode_pgm",
    "encode_pnm",
    "encode_ppm",
    "ink_to_pgm",
    "load_corpus",
    "load_idx",
    "load_idx_arrays",
    "load_mnist",
    "preprocess",
    "resize",
    "select_subset",
]
