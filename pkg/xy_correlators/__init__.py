"""
XY Correlators - ground-state and driven correlation functions of the XY spin chain
"""

__version__ = "1.0.0"
__author__ = "XY Correlators maintainers"
__description__ = "Free-fermion correlators, Fredholm determinants and exact-diagonalization oracles for the XY chain"
