"""Nonlinear periodic homogenization near the identity.

Thin wrapper over the compiled ``_core`` module. Every pipeline returns a
``Result`` holding the report dictionary, the CSV table and a convergence
flag.
"""

import json
from dataclasses import dataclass

from . import _core
from ._core import Density, ElhomError, dist2_so, polar_rotation

__all__ = [
    "Density",
    "ElhomError",
    "Result",
    "commutativity",
    "counterexample1",
    "diagram",
    "dist2_so",
    "expand",
    "homogenize",
    "polar_rotation",
    "quad_homogenize",
    "splitting",
    "validate",
]


@dataclass
class Result:
    data: dict
    csv: str
    converged: bool

    def __getitem__(self, key):
        return self.data[key]


def _wrap(raw):
    doc = json.loads(raw)
    return Result(doc["result"], doc["csv"], doc["converged"])


def validate(density, samples=200, seed=0):
    return _wrap(_core.validate(density, samples, seed))


def homogenize(density, F, k=(1,), res=8, seed=0, tol=1e-8, max_iter=5000, threads=1):
    return _wrap(_core.homogenize(density, F, list(k), res, seed, tol, max_iter, threads))


def quad_homogenize(density, res=16, G=None):
    return _wrap(_core.quad_homogenize(density, res, G))


def expand(density, G, k=1, h=(0.1, 0.05, 0.025), res=16, seed=0, tol=1e-8):
    return _wrap(_core.expand(density, G, k, list(h), res, seed, tol))


def commutativity(density, G, k=(1, 2), h=(0.1, 0.05, 0.025), res=4, seed=0, tol=1e-8):
    return _wrap(_core.commutativity(density, G, list(k), list(h), res, seed, tol))


def diagram(density, lift=None, force=None, eps=(0.5, 0.25), h=(0.1, 0.05), res=16, cell_res=8, seed=0):
    return _wrap(_core.diagram(density, lift, force, list(eps), list(h), res, cell_res, seed))


def counterexample1(alpha=1e-3, delta=(0.1, 0.2), k=(1, 2), res=8, seed=0):
    return _wrap(_core.counterexample1(alpha, list(delta), list(k), res, seed))


def splitting(F, base="stvk", s=0.1, rho=0.15, k=1, res=10, seed=0):
    return _wrap(_core.splitting(list(F), base, s, rho, k, res, seed))
