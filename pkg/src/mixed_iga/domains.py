"""Built-in benchmark domains."""

import json
from collections.abc import Callable
from fractions import Fraction
from functools import cache
from importlib import resources

from .exceptions import DomainError, UnsupportedDomainError
from .geometry import BilinearMapping, MultiPatchDomain, SplineMapping, build_domain, domain_from_dict
from .spline_kernel import make_space

F = Fraction
Point = tuple[Fraction, Fraction]


def _bilinear(f00: Point, f10: Point, f01: Point, f11: Point) -> BilinearMapping:
    return BilinearMapping(((f00, f01), (f10, f11)))


def _star(center: Point, ring: list[Point]) -> list[BilinearMapping]:
    """Patches Ξ0(1-ξ1)(1-ξ2) + Ξ_{2i+1}(1-ξ1)ξ2 + Ξ_{2i+2}ξ1ξ2 + Ξ_{2i+3}ξ1(1-ξ2).

    ``ring`` lists Ξ1, Ξ2, ... and closes on itself.
    """
    n = len(ring) // 2
    return [
        _bilinear(center, ring[(2 * i + 2) % len(ring)], ring[2 * i], ring[2 * i + 1])
        for i in range(n)
    ]


def domain_a() -> MultiPatchDomain:
    return build_domain(
        "A",
        [
            _bilinear(
                (F(3, 4), F(3, 4)), (F(15, 4), F(9, 4)), (F(21, 20), F(27, 10)), (F(3), F(3))
            )
        ],
    )


def domain_b() -> MultiPatchDomain:
    center = (F(12), F(8))
    ring = [
        (F(14), F(44, 5)),
        (F(61, 5), F(109, 10)),
        (F(10), F(91, 10)),
        (F(87, 10), F(36, 5)),
        (F(111, 10), F(6)),
        (F(71, 5), F(13, 2)),
    ]
    return build_domain("B", list(_star(center, ring)))


def domain_c() -> MultiPatchDomain:
    center = (F(14, 5), F(3))
    ring = [
        (F(31, 10), F(4)),
        (F(14, 5), F(26, 5)),
        (F(5, 2), F(4)),
        (F(1), F(7, 5)),
        (F(1), F(1)),
        (F(17, 10), F(9, 10)),
        (F(14, 5), F(11, 10)),
        (F(39, 10), F(9, 10)),
        (F(23, 5), F(1)),
        (F(23, 5), F(7, 5)),
    ]
    return build_domain("C", list(_star(center, ring)))


def domain_d() -> MultiPatchDomain:
    net = (
        ((F(18, 5), F(36, 5)), (F(6), F(39, 5)), (F(42, 5), F(36, 5))),
        ((F(21, 5), F(6)), (F(6), F(6)), (F(39, 5), F(6))),
        ((F(18, 5), F(24, 5)), (F(6), F(21, 5)), (F(42, 5), F(24, 5))),
    )
    return build_domain("D", [SplineMapping(make_space(2, 1, 0), net)])


def domain_e() -> MultiPatchDomain:
    raise UnsupportedDomainError(
        "domain E has no built-in geometry; supply its control points with --geometry-file"
    )


def domain_f() -> MultiPatchDomain:
    text = resources.files("mixed_iga").joinpath("data/domain_f.json").read_text(encoding="utf-8")
    return domain_from_dict(json.loads(text))


def domain_g() -> MultiPatchDomain:
    xi = [(F(3), F(3)), (F(3), F(6)), (F(1), F(6)), (F(1), F(1)), (F(7), F(1)), (F(7), F(3))]
    patches = [
        _bilinear(xi[0], xi[3], xi[1], xi[2]),
        _bilinear(xi[0], xi[5], xi[3], xi[4]),
    ]
    return build_domain("G", patches)


BUILTIN_DOMAINS: dict[str, Callable[[], MultiPatchDomain]] = {
    "A": domain_a,
    "B": domain_b,
    "C": domain_c,
    "D": domain_d,
    "E": domain_e,
    "F": domain_f,
    "G": domain_g,
}


@cache
def builtin_domain(name: str) -> MultiPatchDomain:
    """Look up a built-in domain by its letter.

    Raises:
        DomainError: For an unknown name
        UnsupportedDomainError: For domain E
    """
    key = name.strip().upper()
    if key not in BUILTIN_DOMAINS:
        raise DomainError(f"unknown domain {name!r}; choose one of {', '.join(BUILTIN_DOMAINS)}")
    return BUILTIN_DOMAINS[key]()
