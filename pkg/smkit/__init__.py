"""
smkit - simulation and restoration toolkit for MPI system matrices
"""

__version__ = "0.1.0"
