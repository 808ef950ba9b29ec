from fractions import Fraction

import pytest

from gapbeam import BeamParams, TipParams, assemble, build_mesh


def desk_beam(gamma1=0.0, gamma2=0.0, xi=Fraction(1, 2)):
    """Unit-coefficient beam used throughout the desk-scale tests."""
    return BeamParams(rho1=1.0, rho2=1.0, k=1.0, b=1.0, ell=1.0,
                      gamma1=gamma1, gamma2=gamma2, xi_fraction=xi)


def desk_system(ne=16, gamma1=0.0, gamma2=0.0, xi=Fraction(1, 2),
                tip=TipParams()):
    beam = desk_beam(gamma1, gamma2, xi)
    mesh = build_mesh(beam.ell, beam.xi, ne)
    return assemble(mesh, beam, tip)


@pytest.fixture
def conservative_system():
    return desk_system(ne=16)


@pytest.fixture
def damped_system():
    return desk_system(ne=16, gamma1=1.0, gamma2=1.0)
