"""Two weakly coupled damped oscillators treated as a driven two-level system.

Submodules
----------
model
    Mechanical parameters and their reduction to ``(delta, gamma, W0)``.
drive
    Bias waveforms (sinusoid, rectangular, telegraph, linear sweep).
dynamics
    Integrators for the exact, Schrodinger-like and Bloch descriptions.
analytic
    Closed forms: eigenstructure, Landau-Zener, Stuckelberg, Rabi, Bessel.
observables
    Eigenmode occupation, time averages and parallel parameter sweeps.
cli
    Command-line entry point.
"""

__version__ = "0.1.0"
