"""Resource impact functionals, rates and bounds for open quantum dynamics."""
from .channels import QuantumChannel, SuperOperator, from_kraus
from .dynamics import LindbladGenerator, build_gkls
from .impact import capacity
from .operators import DensityOperator, HermitianObservable, ValidationError
from .resource_maps import ResourceDestroyingMap, make_dephasing, make_replacement, make_twirl

__all__ = [
    "DensityOperator",
    "HermitianObservable",
    "LindbladGenerator",
    "QuantumChannel",
    "ResourceDestroyingMap",
    "SuperOperator",
    "ValidationError",
    "build_gkls",
    "capacity",
    "from_kraus",
    "make_dephasing",
    "make_replacement",
    "make_twirl",
]
