"""Group-ring convolution operators, spectral approximate inverses, the
convolution extension Theta and its Fourier product formula, annihilator and
witness-measure diagnostics, and Haar-measure lattices of finite groups."""

__version__ = "0.1.0"
