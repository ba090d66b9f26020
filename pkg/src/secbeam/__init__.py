"""Simulation and analysis of mmWave beam-alignment security.

Submodules: :mod:`channel`, :mod:`antenna`, :mod:`protocol`,
:mod:`adversary`, :mod:`detection`, :mod:`analysis` and :mod:`harness`.
"""

__version__ = "0.1.0"
