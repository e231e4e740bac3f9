"""Independent reference computations the tests check the library against.

The Born-rule oracle works symbolically (sympy) on explicit amplitude
vectors; it shares no code with mdlbell.qstate. The pattern counter is a
naive quadratic scan.
"""

import sympy as sp

H = sp.Matrix([1, 0])
V = sp.Matrix([0, 1])


def _kron(u, v):
    return sp.Matrix([u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]])


def _basis_vector(theta, outcome):
    c, s = sp.cos(theta), sp.sin(theta)
    return c * H + s * V if outcome == 0 else s * H - c * V


def born_probability(amplitudes, theta_a, theta_b, a, b):
    """Exact |<v_a x v_b | psi>|^2 for real symbolic amplitudes/angles."""
    psi = sp.Matrix(amplitudes)
    va = _basis_vector(theta_a, a)
    vb = _basis_vector(theta_b, b)
    amp = (_kron(va, vb).T * psi)[0]
    return sp.simplify(amp ** 2)


def hardy_state():
    return [0, (sp.sqrt(5) - 1) / (2 * sp.sqrt(3)),
            (sp.sqrt(5) + 1) / (2 * sp.sqrt(3)), 0]


def hardy_angle():
    return sp.acos(sp.sqrt(sp.Rational(1, 2) + 1 / sp.sqrt(5)))


def hardy_angles():
    t = hardy_angle()
    return ({0: t, 1: t - sp.pi / 4}, {0: t + sp.pi / 2, 1: t + sp.pi / 4})


def psi_plus():
    return [0, 1 / sp.sqrt(2), 1 / sp.sqrt(2), 0]


def chsh_angles():
    return ({0: sp.Integer(0), 1: sp.pi / 4}, {0: 3 * sp.pi / 8, 1: sp.pi / 8})


def exact_correlator(amplitudes, theta_a, theta_b):
    total = sp.Integer(0)
    for a in (0, 1):
        for b in (0, 1):
            total += (-1) ** (a + b) * born_probability(amplitudes, theta_a, theta_b, a, b)
    return sp.simplify(total)


def naive_pattern_count(bits: str, pattern: str):
    positions = [i for i in range(len(bits) - len(pattern) + 1)
                 if bits[i:i + len(pattern)] == pattern]
    return len(positions), positions
