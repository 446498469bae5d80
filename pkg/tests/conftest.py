import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from gendetect.data import SyntheticSpec, generate_synthetic
from gendetect.evaluation import split_dataset
from gendetect.models import AutoencoderConfig, ClassifierConfig, train_autoencoder, train_classifier
from gendetect.perturb import build_adv_setup, build_punc_setup


class TinyWorld:
    """Small trained classifier plus ready-made perturbation setups.

    Sized for unit tests: seconds to build, enough signal for detector
    training to beat chance clearly.
    """

    def __init__(self):
        self.train = generate_synthetic(SyntheticSpec("shapes-v1", count=700, size=32, seed=41))
        self.test = generate_synthetic(SyntheticSpec("shapes-v1", count=300, size=32, seed=42))
        self.textures = generate_synthetic(SyntheticSpec("textures-v1", count=120, size=32, seed=43))
        cfg = ClassifierConfig(input_shape=(3, 32, 32), num_classes=4, epochs=16, seed=44)
        self.net, self.report = train_classifier(cfg, self.train, self.test)
        ae_cfg = AutoencoderConfig(input_shape=(3, 32, 32), epochs=6, seed=45)
        self.autoencoder = train_autoencoder(ae_cfg, self.train)
        self.fgsm_setup = build_adv_setup(
            self.net, self.test.images, self.test.labels, "fgsm", seed=46, tol=0.05
        )
        self.gaussian_setup = build_punc_setup(
            self.net, self.test.images, self.test.labels, "gaussian", seed=46, tol=0.05
        )
        self.fgsm_splits = split_dataset(self.fgsm_setup, seed=47)
        self.gaussian_splits = split_dataset(self.gaussian_setup, seed=48)


@pytest.fixture(scope="session")
def tiny_world():
    return TinyWorld()
