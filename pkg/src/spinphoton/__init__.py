"""Spin-photon interface toolkit for Ni2+ in MgO."""
__version__ = "0.1.0"
