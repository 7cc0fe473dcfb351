"""Standard test functions for checking the optimizer."""
import numpy as np


def sphere(z) -> float:
    z = np.asarray(z, dtype=float)
    return float(np.sum(z * z))


def rosenbrock(z, a: float = 1.0, b: float = 100.0) -> float:
    z = np.asarray(z, dtype=float)
    return float(np.sum(b * (z[1:] - z[:-1] ** 2) ** 2 + (a - z[:-1]) ** 2))
