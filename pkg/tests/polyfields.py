"""Random polynomial fields with closed-form derivatives, shared by tests."""

import numpy as np


def poly_field(rng, degree):
    """Random polynomial vector field of total degree <= degree, with its curl."""
    ea = [(a, b) for d in range(degree + 1) for a in range(d + 1) for b in [d - a]]
    c1, c2 = rng.standard_normal(len(ea)), rng.standard_normal(len(ea))

    def f(x, y):
        x, y = np.asarray(x), np.asarray(y)
        return (sum(c * x ** a * y ** b for c, (a, b) in zip(c1, ea)),
                sum(c * x ** a * y ** b for c, (a, b) in zip(c2, ea)))

    def curl(x, y):
        x, y = np.asarray(x), np.asarray(y)
        dv2dx = sum(c * a * x ** max(a - 1, 0) * y ** b for c, (a, b) in zip(c2, ea) if a > 0)
        dv1dy = sum(c * b * x ** a * y ** max(b - 1, 0) for c, (a, b) in zip(c1, ea) if b > 0)
        return dv2dx - dv1dy + 0 * x

    return f, curl


def poly_scalar(rng, degree):
    ea = [(a, b) for d in range(degree + 1) for a in range(d + 1) for b in [d - a]]
    c = rng.standard_normal(len(ea))

    def g(x, y):
        x, y = np.asarray(x), np.asarray(y)
        return sum(ci * x ** a * y ** b for ci, (a, b) in zip(c, ea)) + 0 * x

    def grad(x, y):
        x, y = np.asarray(x), np.asarray(y)
        gx = sum(ci * a * x ** max(a - 1, 0) * y ** b for ci, (a, b) in zip(c, ea) if a > 0)
        gy = sum(ci * b * x ** a * y ** max(b - 1, 0) for ci, (a, b) in zip(c, ea) if b > 0)
        return gx + 0 * x, gy + 0 * x

    return g, grad
