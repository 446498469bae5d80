from .attacks import AttackConfig, bim, cwl2, deepfool, fgsm
from .calibrate import (
    CalibrationResult,
    PerturbationFamily,
    bisect_severity,
    calibrate_severity,
    get_family,
    misclassification_rate,
)
from .noise import gaussian_noise, impulse_noise, shot_noise
from .setups import (
    PerturbationSetup,
    build_adv_setup,
    build_ood_setup,
    build_punc_setup,
    load_setup,
    save_setup,
)

__all__ = [
    "AttackConfig",
    "CalibrationResult",
    "PerturbationFamily",
    "PerturbationSetup",
    "bim",
    "bisect_severity",
    "build_adv_setup",
    "build_ood_setup",
    "build_punc_setup",
    "calibrate_severity",
    "cwl2",
    "deepfool",
    "fgsm",
    "gaussian_noise",
    "get_family",
    "impulse_noise",
    "load_setup",
    "misclassification_rate",
    "save_setup",
    "shot_noise",
]
