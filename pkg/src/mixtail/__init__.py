"""mixtail: boundary maximum likelihood for binary mixture models.

Subpackages cover the generator-pair catalog, slow-variation and
stable-limit asymptotics, the boundary likelihood fitter, simulation
experiments, the composite signal family, and a command line front end.
"""

__version__ = "0.1.0"
