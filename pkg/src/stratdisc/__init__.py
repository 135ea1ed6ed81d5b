"""Uniform projection criterion under the stratified L2-discrepancy."""
from .design import Design, read_design, write_design
from .weights import WeightScheme, make_weights, parse_weights, kernel_constants
from .metrics import (
    bounds,
    distance_matrix,
    phi_sd,
    phi_sd_fast,
    phi_sd_oracle,
    phi_sd3,
    sd2,
    sd2_cell_oracle,
)

__all__ = [
    "Design", "read_design", "write_design",
    "WeightScheme", "make_weights", "parse_weights", "kernel_constants",
    "bounds", "distance_matrix", "phi_sd", "phi_sd_fast", "phi_sd_oracle", "phi_sd3", "sd2", "sd2_cell_oracle",
]
__version__ = "0.1.0"
