"""Grid quantum mechanics with an adjustable generator scale ``theta``.

Submodules: ``hilbert`` (grids and states), ``spectralops`` (Fourier-basis
operators), ``matrixrep`` (truncated ladder-basis matrices), ``symmetry``
(translations, boosts, rotations), ``continuity`` (currents), ``dynamics``
(split-step evolution), ``hybrid`` (mean-field classical/quantum coupling),
``twobody`` (two particles on a line) and ``cli`` (verification suites).
"""

__version__ = "0.1.0"
