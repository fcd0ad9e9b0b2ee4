"""The Heisenberg group {Im z = Im(x conj(y))} in C^3 and its line family."""
from dataclasses import dataclass

import numpy as np


def heisenberg_defect(x, y, z):
    return np.imag(z) - np.imag(x * np.conj(y))


def heisenberg_membership(x, y, z, tol=1e-12):
    return bool(abs(heisenberg_defect(x, y, z)) <= tol)


@dataclass(frozen=True)
class ComplexLine:
    """L_{a,b,w} = {(s, w + a s, s conj(w) + b) : s in C}."""
    a: float
    b: float
    w: complex

    def point(self, s):
        s = np.asarray(s, dtype=complex)
        return s, self.w + self.a * s, s * np.conj(self.w) + self.b

    def defects(self, s):
        return heisenberg_defect(*self.point(s))


def heisenberg_line(a, b, w):
    return ComplexLine(float(a), float(b), complex(w))
