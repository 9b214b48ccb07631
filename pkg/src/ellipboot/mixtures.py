"""Gaussian-mixture test beds for the coverage study.

Catalog names are ``{biv,tri}-{normal-indep,normal-dep,skewed,kurtotic,bimodal,trimodal}``.
Bivariate components are written ``N(mu1, mu2, s11, s22, s12)`` and
trivariate ones ``N(mu1, mu2, mu3, s11, s22, s33, s12, s13, s23)``.

Two trivariate rows need completing: the skewed components list only two
of the three covariances (the missing ``s23`` is 0), and the bimodal
weights 1/3 and 1/2 are renormalized to 2/5 and 3/5.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import numcore
from .errors import CatalogError, DomainError
from .moments import Sample
from .resampling import SeedSpec


@dataclass(frozen=True, eq=False)
class Component:
    weight: float
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    name: str
    components: tuple[Component, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise DomainError("mixture needs at least one component")
        p = self.components[0].mean.size
        for c in self.components:
            if c.mean.size != p or c.cov.shape != (p, p):
                raise DomainError(f"{self.name}: component dimensions disagree")
            if not 0.0 < c.weight <= 1.0:
                raise DomainError(f"{self.name}: weight {c.weight} outside (0, 1]")
            if not numcore.is_positive_definite(c.cov):
                raise DomainError(f"{self.name}: component covariance is not positive definite")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"{self.name}: weights sum to {total}, not 1")

    @property
    def p(self) -> int:
        return self.components[0].mean.size

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([c.weight for c in self.components])

    @classmethod
    def from_parts(cls, name: str, parts, normalize: bool = False) -> MixtureSpec:
        """Build from ``(weight, mean, cov)`` triples."""
        ws = [float(w) for w, _, _ in parts]
        if normalize:
            tot = sum(ws)
            ws = [w / tot for w in ws]
        comps = tuple(
            Component(w, np.asarray(mu, dtype=np.float64), numcore.as_symmetric(np.asarray(cov, dtype=np.float64)))
            for w, (_, mu, cov) in zip(ws, parts)
        )
        return cls(name, comps)


def true_mean(m: MixtureSpec) -> NDArray[np.float64]:
    return sum(c.weight * c.mean for c in m.components)


def true_cov(m: MixtureSpec) -> NDArray[np.float64]:
    mu = true_mean(m)
    return sum(c.weight * (c.cov + np.outer(c.mean - mu, c.mean - mu)) for c in m.components)


def draw(m: MixtureSpec, n: int, seed: SeedSpec | np.random.Generator) -> Sample:
    """``n`` i.i.d. rows: pick a component by weight, then ``mean + cov^{1/2} z``."""
    if n < 1:
        raise DomainError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else seed.generator()
    labels = rng.choice(len(m.components), size=n, p=m.weights)
    z = rng.standard_normal((n, m.p))
    out = np.empty((n, m.p))
    for k, c in enumerate(m.components):
        sel = labels == k
        out[sel] = c.mean + z[sel] @ numcore.sym_sqrt(c.cov)
    return Sample(out)


def _biv(mu1, mu2, s11, s22, s12):
    return (mu1, mu2), ((s11, s12), (s12, s22))


def _tri(mu1, mu2, mu3, s11, s22, s33, s12, s13=0, s23=0):
    return (mu1, mu2, mu3), ((s11, s12, s13), (s12, s22, s23), (s13, s23, s33))


def _fl(x):
    return tuple(float(v) for v in x) if not isinstance(x[0], tuple) else tuple(_fl(r) for r in x)


def _parts(*items):
    return [(w, _fl(mu), _fl(cov)) for w, (mu, cov) in items]


_third, _fifth = F(1, 3), F(1, 5)
_SK = (F(13, 12), F(25, 81))
_TM = (F(9, 25), F(63, 250))

_TABLE = {
    "biv-normal-indep": _parts((1, _biv(0, 0, 1, 1, 0))),
    "biv-normal-dep": _parts((1, _biv(0, 0, 1, 1, F(1, 2)))),
    "biv-skewed": _parts(
        (_fifth, _biv(0, 0, 1, 1, 0)),
        (_fifth, _biv(F(1, 2), F(1, 2), F(4, 9), F(4, 9), 0)),
        (F(3, 5), _biv(_SK[0], _SK[0], _SK[1], _SK[1], 0)),
    ),
    "biv-kurtotic": _parts(
        (F(2, 3), _biv(0, 0, 1, 4, 1)),
        (_third, _biv(0, 0, F(4, 9), F(1, 9), F(-1, 9))),
    ),
    "biv-bimodal": _parts(
        (F(1, 2), _biv(-1, 0, F(4, 9), F(4, 9), 0)),
        (F(1, 2), _biv(1, 0, F(4, 9), F(4, 9), 0)),
    ),
    "biv-trimodal": _parts(
        (_third, _biv(F(-6, 5), 0, _TM[0], _TM[0], _TM[1])),
        (_third, _biv(F(6, 5), 0, _TM[0], _TM[0], _TM[1])),
        (_third, _biv(0, 0, _TM[0], _TM[0], -_TM[1])),
    ),
    "tri-normal-indep": _parts((1, _tri(0, 0, 0, 1, 1, 1, 0, 0, 0))),
    "tri-normal-dep": _parts((1, _tri(0, 0, 0, 1, 1, 1, F(3, 10), F(2, 5), F(1, 2)))),
    "tri-skewed": _parts(
        (_fifth, _tri(0, 0, 0, 1, 1, 1, 0, 0)),
        (_fifth, _tri(F(1, 2), F(1, 2), F(1, 2), F(4, 9), F(4, 9), F(4, 9), 0, 0)),
        (F(3, 5), _tri(_SK[0], _SK[0], _SK[0], _SK[1], _SK[1], _SK[1], 0, 0)),
    ),
    "tri-kurtotic": _parts(
        (F(2, 3), _tri(0, 0, 0, 1, 4, 6, 1, 1, 2)),
        (_third, _tri(0, 0, 0, F(4, 9), F(1, 9), F(1, 16), F(-1, 9), 0, 0)),
    ),
    "tri-bimodal": _parts(
        (_third, _tri(-1, -1, -1, F(4, 9), F(4, 9), F(4, 9), 0, 0, 0)),
        (F(1, 2), _tri(1, 0, 0, F(4, 9), F(4, 9), F(4, 9), 0, 0, 0)),
    ),
    "tri-trimodal": _parts(
        (_third, _tri(-3, 0, 0, _TM[0], _TM[0], _TM[0], _TM[1], 0, 0)),
        (_third, _tri(3, 0, 0, _TM[0], _TM[0], _TM[0], _TM[1], _TM[1], _TM[1])),
        (_third, _tri(0, 0, 0, _TM[0], _TM[0], _TM[0], -_TM[1], 0, 0)),
    ),
}

CATALOG: tuple[str, ...] = tuple(_TABLE)


def builtin(name: str) -> MixtureSpec:
    """Catalog mixture by name; weights that do not sum to one are renormalized."""
    try:
        parts = _TABLE[name]
    except KeyError:
        raise CatalogError(f"unknown distribution {name!r}; valid names: {', '.join(CATALOG)}") from None
    return MixtureSpec.from_parts(name, parts, normalize=True)


def describe(m: MixtureSpec) -> str:
    lines = [f"{m.name} (p={m.p})"]
    for c in m.components:
        lines.append(f"  w={c.weight:.6g} mean={np.array2string(c.mean, precision=4)} cov={np.array2string(c.cov, precision=4).replace(chr(10), '')}")
    return "\n".join(lines)
