"""Regenerate the small benchmark files under data/ from scikit-learn's bundled datasets.

Each dataset is standardized, optionally projected with PCA, and written in
LIBSVM format. Binary tasks use raw labels -1/+1; multiclass tasks use 0..K-1.
"""
from pathlib import Path

import numpy as np
from sklearn import datasets
from sklearn.decomposition import PCA
from sklearn.preprocessing import StandardScaler

OUT = Path(__file__).resolve().parent.parent / "data"


def prep(x, n_components=None):
    x = StandardScaler().fit_transform(x)
    if n_components is not None and x.shape[1] > n_components:
        x = PCA(n_components=n_components, random_state=0).fit_transform(x)
        x = StandardScaler().fit_transform(x)
    return x


def pair(x, y, neg, pos):
    mask = (y == neg) | (y == pos)
    return x[mask], np.where(y[mask] == pos, 1, -1)


def write_libsvm(path, x, y):
    with open(path, "w") as f:
        for row, label in zip(x, y):
            feats = " ".join(f"{i + 1}:{v:.6g}" for i, v in enumerate(row) if v != 0.0)
            lab = f"{int(label):+d}" if set(np.unique(y)) <= {-1, 1} else str(int(label))
            f.write(f"{lab} {feats}\n")


def main():
    OUT.mkdir(exist_ok=True)
    bc = datasets.load_breast_cancer()
    write_libsvm(OUT / "wdbc.libsvm", prep(bc.data, 8), np.where(bc.target == 1, 1, -1))

    iris = datasets.load_iris()
    x, y = pair(iris.data, iris.target, 1, 2)
    write_libsvm(OUT / "iris_versicolor_virginica.libsvm", prep(x), y)

    wine = datasets.load_wine()
    x, y = pair(wine.data, wine.target, 1, 2)
    write_libsvm(OUT / "wine_1vs2.libsvm", prep(x, 8), y)

    digits = datasets.load_digits()
    for a, b in [(3, 5), (7, 9)]:
        x, y = pair(digits.data, digits.target, a, b)
        write_libsvm(OUT / f"digits_{a}vs{b}.libsvm", prep(x, 8), y)

    # multiclass
    write_libsvm(OUT / "iris.libsvm", prep(iris.data), iris.target)
    write_libsvm(OUT / "wine.libsvm", prep(wine.data, 6), wine.target)


if __name__ == "__main__":
    main()
