"""Analytic integrands with closed-form values, one battery per engine."""
import math

import numpy as np
from scipy.special import erf

inf = np.inf


def _abs_kink(x):
    return np.abs(x - 0.3)


ONE_D = [
    ("bose x^3", lambda x: x**3 * np.exp(-x) / -np.expm1(-np.maximum(x, 1e-300)), 0, inf, math.pi**4 / 15),
    ("sin 2x", lambda x: np.sin(2 * x), 0, 100, (1 - math.cos(200)) / 2),
    ("exp", lambda x: np.exp(-x), 0, inf, 1.0),
    ("lorentzian", lambda x: 1 / (1 + x * x), 0, inf, math.pi / 2),
    ("sqrt", np.sqrt, 0, 1, 2 / 3),
    ("log", lambda x: np.log(np.maximum(x, 1e-300)), 0, 1, -1.0),
    ("cos 50x", lambda x: np.cos(50 * x), 0, 1, math.sin(50) / 50),
    ("x^5 gauss", lambda x: x**5 * np.exp(-x * x), 0, inf, 1.0),
    ("kink", _abs_kink, 0, 1, 0.3**2 / 2 + 0.7**2 / 2),
    ("1/sqrt", lambda x: 1 / np.sqrt(np.maximum(x, 1e-300)), 0, 1, 2.0),
]

_a = 10.0
NESTED = [
    ("xy", lambda x, y: x * y, [(0, 1), (0, 1)], 0.25),
    ("exp", lambda x, y: np.exp(-x - y), [(0, inf), (0, inf)], 1.0),
    ("triangle", lambda x, y: x * x + y * y, [(0, 1), (0, lambda x: x)], 1 / 3),
    ("sin sin", lambda x, y: np.sin(x) * np.sin(y), [(0, math.pi), (0, math.pi)], 4.0),
    ("xyz", lambda x, y, z: x * y * z, [(0, 1)] * 3, 0.125),
    ("rational", lambda x, y: 1 / (1 + x + y), [(0, 1), (0, 1)], 3 * math.log(3) - 4 * math.log(2)),
    ("4d product", lambda a, b, c, d: a * b * c * d, [(0, 1)] * 4, 1 / 16),
    ("gauss", lambda x, y: np.exp(-x * x - y * y), [(0, inf), (0, inf)], math.pi / 4),
    ("quarter disk", lambda x, y: np.ones_like(y), [(0, 1), (0, lambda x: math.sqrt(max(0.0, 1 - x * x)))],
     math.pi / 4),
    ("cos sum", lambda x, y: np.cos(_a * (x + y)), [(0, 1), (0, 1)],
     (math.sin(_a) ** 2 - (1 - math.cos(_a)) ** 2) / _a**2),
]

_g0 = math.sqrt(math.pi) / 2 * erf(1.0)
_g2 = math.sqrt(math.pi) / 4 * erf(1.0) - 1 / (2 * math.e)
UNIT = (np.zeros(3), np.ones(3))
SHIFTED = (np.array([0.0, 0.0, 2.0]), np.array([1.0, 1.0, 3.0]))

MC = [
    ("constant", lambda x: np.full(len(x), 2.5), UNIT, UNIT, 2.5),
    ("linear", lambda x: x.sum(axis=1), UNIT, UNIT, 3.0),
    ("gauss poly", lambda x: np.exp(-(x * x).sum(axis=1)) * x[:, 0] ** 2, UNIT, UNIT, _g2 * _g0**5),
    ("product", lambda x: np.prod(x, axis=1), UNIT, UNIT, 1 / 64),
    ("cos", lambda x: np.cos(x[:, 0] - x[:, 3]), UNIT, UNIT, 2 * (1 - math.cos(1))),
    ("z separation", lambda x: x[:, 5] - x[:, 2], UNIT, SHIFTED, 2.0),
    ("inverse", lambda x: 1 / (x[:, 5] - x[:, 2]), UNIT, SHIFTED, 3 * math.log(3) - 4 * math.log(2)),
    ("square", lambda x: (x[:, 0] - x[:, 3]) ** 2, UNIT, UNIT, 1 / 6),
    ("exp", lambda x: np.exp(x[:, 1] + x[:, 4]), UNIT, UNIT, (math.e - 1) ** 2),
    ("abs diff", lambda x: np.abs(x[:, 2] - x[:, 5]), UNIT, UNIT, 1 / 3),
]
