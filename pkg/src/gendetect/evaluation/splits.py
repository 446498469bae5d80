"""Stratified 80/10/10 splitting of perturbation setups."""

import numpy as np

from ..rng import stream_rng


def split_indices(labels, seed, fractions=(0.8, 0.1, 0.1)):
    """Disjoint, exhaustive, seed-reproducible index split, stratified by label.

    Per label class: floor(n/10) samples go to validation and to test, the
    rest to training, shuffled within the class; errors if any class cannot
    populate every split.
    """
    labels = np.asarray(labels)
    rng = stream_rng(seed, "split")
    train, val, test = [], [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n = len(idx)
        n_val = int(np.floor(n * fractions[1]))
        n_test = int(np.floor(n * fractions[2]))
        if n_val == 0 or n_test == 0 or n - n_val - n_test == 0:
            raise ValueError(
                f"class {cls} has only {n} samples: a split would be empty"
            )
        perm = idx[rng.permutation(n)]
        val.append(perm[:n_val])
        test.append(perm[n_val : n_val + n_test])
        train.append(perm[n_val + n_test :])
    return (
        np.sort(np.concatenate(train)),
        np.sort(np.concatenate(val)),
        np.sort(np.concatenate(test)),
    )


def split_dataset(setup, seed):
    """Split a PerturbationSetup (or any object with .subset/.labels) into
    (train, val, test) parts of 80%/10%/10%."""
    tr, va, te = split_indices(setup.labels, seed)
    return setup.subset(tr, "train"), setup.subset(va, "val"), setup.subset(te, "test")
