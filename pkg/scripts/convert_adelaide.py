"""Convert AdelaideRMF .mat files to the package CSV format (x1,y1,x2,y2,label).

The .mat files hold ``data`` (6 x N homogeneous point pairs) and ``label``
(N, 0 = outlier). Coordinates are kept as stored; the default residual scale
assumes pixel units, so normalised copies need --residual-scale adjusted.

    python3 scripts/convert_adelaide.py raw/*.mat --out adelaide/
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from g2mf.dataio import Dataset, save_dataset


def convert(path, out_dir):
    mat = loadmat(path)
    data = np.asarray(mat["data"], dtype=float)
    if data.shape[0] != 6:
        data = data.T
    x1 = (data[:2] / data[2]).T
    x2 = (data[3:5] / data[5]).T
    labels = np.asarray(mat["label"]).ravel().astype(int)
    # relabel to a contiguous 0..K with 0 kept as outlier
    models = np.unique(labels[labels > 0])
    remap = {int(m): k for k, m in enumerate(models, start=1)}
    gt = np.array([remap.get(int(v), 0) for v in labels])
    ds = Dataset(x1, x2, gt, Path(path).stem)
    target = Path(out_dir) / f"{ds.name}.csv"
    save_dataset(ds, target)
    return target, len(ds), len(models)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("files", nargs="+")
    p.add_argument("--out", default=".")
    args = p.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    for f in args.files:
        target, n, k = convert(f, args.out)
        print(f"{target}: {n} points, {k} models")


if __name__ == "__main__":
    main()
