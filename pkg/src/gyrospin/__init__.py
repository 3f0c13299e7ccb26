"""gyrospin: spin-rotation coupling in gyroscopically stabilized nanorotors.

Simulates a rapidly spinning charged nanodiamond carrying a single NV spin:
the hierarchy of effective Hamiltonians for the residual planar rotation,
closed-form observables (Barnett alignment, potential surfaces, spin-echo
visibility), validity conditions, and decoherence-rate estimates.
"""

__version__ = "0.1.0"
