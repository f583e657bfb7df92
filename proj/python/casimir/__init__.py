"""Casimir energies from scattering matrices.

Materials are given as "perfect_mirror", "vacuum" or a dict such as
{"model": "drude", "omega_p": 1.37e16, "gamma": 5.32e13} (SI units).
"""

import json as _json

from . import _casimir
from ._casimir import (
    HBAR,
    SPEED_OF_LIGHT,
    CasimirError,
    ideal_plane_energy_per_area,
    logdet,
    random_unitary,
    toy_band_energies,
    toy_mode_spacing,
    unitary_dilation,
)

__all__ = [
    "HBAR",
    "SPEED_OF_LIGHT",
    "CasimirError",
    "ideal_plane_energy_per_area",
    "logdet",
    "plane_energy",
    "random_unitary",
    "run_cli",
    "sphere_energy",
    "toy_band_energies",
    "toy_mode_spacing",
    "unitary_dilation",
]


def _material(m):
    return _json.dumps(m)


def plane_energy(separation, mat1="perfect_mirror", mat2="perfect_mirror", medium="vacuum", **quad):
    """Energy per area (J/m^2) of two half-spaces; returns a dict with value, error_estimate, converged."""
    return _casimir.plane_energy(separation, _material(mat1), _material(mat2), _material(medium), **quad)


def sphere_energy(distance, R1=1e-6, R2=1e-6, mat1="perfect_mirror", mat2="perfect_mirror", lmax=0, **quad):
    """Energy (J) of two spheres at centre distance `distance`; lmax=0 picks the truncation automatically."""
    return _casimir.sphere_energy(distance, R1, R2, _material(mat1), _material(mat2), lmax, **quad)


def run_cli(*args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _casimir.run_cli([str(a) for a in args])
