"""Capacity lower bounds and quantum-repeater gain for error-corrected qudit repeaters."""

from .channels import PhysicalParams, Topology, build_fock_approx, link_transmissivity, storage_error_rate
from .qecc import CodeParams, custom_code, polynomial_code
from .statistics import Encoding, GainReport, evaluate, pseudothreshold

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams",
    "Topology",
    "CodeParams",
    "Encoding",
    "GainReport",
    "build_fock_approx",
    "custom_code",
    "evaluate",
    "link_transmissivity",
    "polynomial_code",
    "pseudothreshold",
    "storage_error_rate",
]
