"""Shared fixtures and hypothesis profiles."""

import os
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from mixed_iga.config import Settings
from mixed_iga.domains import builtin_domain
from mixed_iga.geometry import BilinearMapping, MultiPatchDomain, build_domain

settings.register_profile("fast", max_examples=10, deadline=None)
settings.register_profile(
    "ci", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))

F = Fraction


def bilinear(f00: tuple, f10: tuple, f01: tuple, f11: tuple) -> BilinearMapping:
    return BilinearMapping(((f00, f01), (f10, f11)))


@pytest.fixture
def app_settings(tmp_path, monkeypatch) -> Settings:
    monkeypatch.setenv("MIXED_IGA_OUTPUT_DIR", str(tmp_path / "results"))
    return Settings()


@pytest.fixture(scope="session")
def unit_square() -> MultiPatchDomain:
    """One identity patch."""
    return build_domain("unit", [bilinear((0, 0), (1, 0), (0, 1), (1, 1))])


@pytest.fixture(scope="session")
def two_squares() -> MultiPatchDomain:
    """[0,2] x [0,1] split at x = 1 into two identity-shaped patches."""
    return build_domain(
        "two",
        [
            bilinear((0, 0), (1, 0), (0, 1), (1, 1)),
            bilinear((1, 0), (2, 0), (1, 1), (2, 1)),
        ],
    )


@pytest.fixture(scope="session")
def domain_g() -> MultiPatchDomain:
    return builtin_domain("G")
