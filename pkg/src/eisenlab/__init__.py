"""eisenlab: a numerical laboratory for regularized moments of Eisenstein
series on the modular surface.

Subpackages
-----------
specfun      scalar special-function kernels (Gamma, zeta, xi, K-Bessel, tau)
quad         adaptive quadrature over intervals, lines, and the fundamental domain
eisenstein   Eisenstein series evaluation with certified Fourier truncation
regularize   growth profiles, their antiderivative correction, regularized integrals
spectral     triple products, the eight-ratio limit calculus, fourth-moment assembly
cuspmoments  twisted cusp-zone second moments by two routes, residue catalogue
maassdata    Maass cusp-form datasets and completed L-values
cli          command-line front end
"""

__version__ = "0.1.0"
