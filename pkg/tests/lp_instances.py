"""Frozen tiny instances behind the committed LP golden files."""

import numpy as np

from lipsparse.core import Dataset, GroupPartition
from lipsparse.lpexport import build_group_linf_svm_lp, build_l1_lad_lp, build_l1_svm_lp


def l1svm_data():
    X = np.array([[1.0, -0.5], [0.1, 2.0], [-1.0 / 3.0, 0.0]])
    return Dataset(X, [1.0, -1.0, 1.0])


def groupsvm_data():
    X = np.array([[0.5, -1.25, 2.0, 1e-3], [-2.0, 0.75, 0.0, 3.5]])
    return Dataset(X, [-1.0, 1.0], GroupPartition.contiguous(4, 2))


def l1lad_data():
    X = np.array([[1.0, 2.0], [-0.2, 0.3], [4.0, -1.0]])
    return Dataset(X, [0.7, -1.1, 2.0])


# form -> (data builder, LP builder, lambda)
INSTANCES = {
    "l1svm": (l1svm_data, build_l1_svm_lp, 0.25),
    "groupsvm": (groupsvm_data, build_group_linf_svm_lp, 1.5),
    "l1lad": (l1lad_data, build_l1_lad_lp, 0.1),
}


def l1svm_model():
    return build_l1_svm_lp(l1svm_data(), 0.25)


def groupsvm_model():
    return build_group_linf_svm_lp(groupsvm_data(), 1.5)


def l1lad_model():
    return build_l1_lad_lp(l1lad_data(), 0.1)


GOLDENS = {
    "l1svm_tiny.lp": l1svm_model,
    "groupsvm_tiny.lp": groupsvm_model,
    "l1lad_tiny.lp": l1lad_model,
}
