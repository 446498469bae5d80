from .container import DatasetContainer, load_dataset, save_dataset
from .synthetic import SyntheticSpec, generate_synthetic

__all__ = [
    "DatasetContainer",
    "SyntheticSpec",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
]
