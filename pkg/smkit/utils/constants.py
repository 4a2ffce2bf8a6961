"""
Physical constants and unit conversions at the input boundary
"""
import math

# Vacuum permeability, T·m/A
MU0 = 4.0e-7 * math.pi

# Boltzmann constant, J/K (CODATA exact)
KB = 1.380649e-23


def tesla_per_meter_to_si(value):
    """T·m⁻¹·μ₀⁻¹ -> A/m²"""
    return value / MU0


def millitesla_to_si(value):
    """mT·μ₀⁻¹ -> A/m"""
    return value * 1e-3 / MU0
