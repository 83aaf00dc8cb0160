"""Two-point sharpness: the h-variation objective and its minimizers.

On ``Omega = E u E^c`` with ``P(E) = p <= 1/2``, ``F_1`` trivial and
``F_n = sigma(E)`` for ``n >= 2``, take ``f = (lam/p) 1_E``.  Any
decomposition with ``g = 0`` and ``k = a 1_E + b 1_{E^c}`` has h-variation

    phi(a, b) = |lam - p a - q b| + 2 p q |lam/p - a + b|,     q = 1 - p.

Everything here is exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels, arith
from .errors import DomainError
from .filtration import Filtration

Q = arith.Q

# int64 headroom for the lattice kernel: |c0| + n (|ci| + |cj|) stays below this
_INT64_SAFE = 2 ** 62


def _q(x):
    return arith.scalar(x, True)


@dataclass(frozen=True)
class TwoPointInstance:
    p: object
    lam: object
    beta: object

    def __post_init__(self):
        p, lam, beta = _q(self.p), _q(self.lam), _q(self.beta)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "beta", beta)
        if not 0 < p <= Q(1, 2):
            raise DomainError("p must lie in (0, 1/2]")
        if not lam > 0:
            raise DomainError("lambda must be positive")
        if not 0 <= beta <= 1 / p:
            raise DomainError("beta must lie in [0, 1/p]")

    @property
    def q(self):
        return 1 - self.p

    @property
    def box(self):
        return self.beta * self.lam

    def f(self) -> tuple:
        """``f`` as ``(value on E, value on E^c)``."""
        return (self.lam / self.p, Q(0))

    def filtration(self, horizon: int = 2) -> Filtration:
        levels = [[("Omega", None, 1)]]
        for n in range(2, horizon + 1):
            pe = "Omega" if n == 2 else f"E{n - 1}"
            pc = "Omega" if n == 2 else f"Ec{n - 1}"
            levels.append([(f"E{n}", pe, self.p), (f"Ec{n}", pc, self.q)])
        return Filtration.from_levels(levels)


def phi(inst: TwoPointInstance, a, b):
    """h-variation of the decomposition ``g = 0``, ``k = a 1_E + b 1_{E^c}``."""
    a, b = _q(a), _q(b)
    if not (0 <= a <= inst.box and 0 <= b <= inst.box):
        raise DomainError("(a, b) outside [0, beta*lam]^2")
    return _phi(inst, a, b)


def _phi(inst, a, b):
    p, q, lam = inst.p, inst.q, inst.lam
    return abs(lam - p * a - q * b) + 2 * p * q * abs(lam / p - a + b)


def piecewise_bound(p, beta, lam=1):
    """Lower bound on the h-variation when ``g = 0`` and ``0 <= k <= beta lam``."""
    p, beta, lam = _q(p), _q(beta), _q(lam)
    if beta <= 1:
        return (3 - beta - 2 * p) * lam
    return 2 * (1 - p * beta) * lam


def minimize_phi_analytic(inst: TwoPointInstance):
    """Closed-form minimum and argmin of ``phi`` over the box."""
    p, q, lam, beta = inst.p, inst.q, inst.lam, inst.beta
    if beta <= 1:
        return (3 - beta - 2 * p) * lam, (beta * lam, beta * lam)
    return 2 * (1 - p * beta) * lam, (beta * lam, (1 - p * beta) * lam / q)


def _lattice_coefficients(inst: TwoPointInstance, n: int):
    """Integer affine forms whose absolute values sum to ``D * phi`` on the lattice.

    With ``p = P/Qd``, ``lam = L/K``, ``beta = U/V`` and lattice points
    ``a = i beta lam / n``, ``b = j beta lam / n``, the common denominator is
    ``D = Qd^2 V K n``.
    """
    P, Qd = int(inst.p.numerator), int(inst.p.denominator)
    L, K = int(inst.lam.numerator), int(inst.lam.denominator)
    U, V = int(inst.beta.numerator), int(inst.beta.denominator)
    R = Qd - P
    D = Qd * Qd * V * K * n
    c0 = L * Qd * Qd * V * n
    ci = -P * Qd * U * L
    cj = -R * Qd * U * L
    d0 = 2 * R * Qd * L * V * n
    di = -2 * P * R * U * L
    dj = 2 * P * R * U * L
    return D, (c0, ci, cj, d0, di, dj)


def lattice_min(inst: TwoPointInstance, grid_n: int):
    """Exact minimum of ``phi`` over the ``(grid_n+1)^2`` lattice only."""
    if grid_n < 2:
        raise DomainError("grid_n must be >= 2")
    D, coeffs = _lattice_coefficients(inst, grid_n)
    c0, ci, cj, d0, di, dj = coeffs
    bound = abs(c0) + abs(d0) + grid_n * (abs(ci) + abs(cj) + abs(di) + abs(dj))
    if bound < _INT64_SAFE:
        best, i, j = _kernels.phi_lattice_argmin(c0, ci, cj, d0, di, dj, grid_n)
    else:
        best, i, j = _py_lattice_argmin(coeffs, grid_n)
    step = inst.box / grid_n
    return Q(best, D), (i * step, j * step)


def _py_lattice_argmin(coeffs, n):
    c0, ci, cj, d0, di, dj = coeffs
    best, bi, bj = None, 0, 0
    for i in range(n + 1):
        for j in range(n + 1):
            v = abs(c0 + ci * i + cj * j) + abs(d0 + di * i + dj * j)
            if best is None or v < best:
                best, bi, bj = v, i, j
    return best, bi, bj


def boundary_points(inst: TwoPointInstance, grid_n: int):
    """Points of the kink line ``p a + q b = lam`` above each lattice coordinate."""
    p, q, lam, box = inst.p, inst.q, inst.lam, inst.box
    step = box / grid_n if grid_n else Q(0)
    pts = []
    for i in range(grid_n + 1):
        x = i * step
        b = (lam - p * x) / q
        if 0 <= b <= box:
            pts.append((x, b))
        a = (lam - q * x) / p
        if 0 <= a <= box:
            pts.append((a, x))
    return pts


def minimize_phi_bruteforce(inst: TwoPointInstance, grid_n: int):
    """Exhaustive lattice minimum, augmented with the kink line ``p a + q b = lam``."""
    best, arg = lattice_min(inst, grid_n)
    for a, b in boundary_points(inst, grid_n):
        v = _phi(inst, a, b)
        if v < best:
            best, arg = v, (a, b)
    return best, arg


def phi_lipschitz(inst: TwoPointInstance):
    """Lipschitz constant of ``phi`` in the sup-norm on ``(a, b)``."""
    p, q = inst.p, inst.q
    return (p + q) + 2 * p * q * 2


def witness(inst: TwoPointInstance):
    """Extremal decomposition ``(g, h, k)`` as two-point pairs."""
    _, (a, b) = minimize_phi_analytic(inst)
    fE, fEc = inst.f()
    k = (a, b)
    return (Q(0), Q(0)), (fE - a, fEc - b), k


# --------------------------------------------------------------------------
# dichotomy
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    alternative: str          # "i" or "ii"
    localized_probability: object
    variation: object
    bound: object
    holds: bool
    attained: bool


def two_point_variation(inst: TwoPointInstance, h) -> object:
    """``|E h| + E|h - E h|`` for a two-point ``h``."""
    hE, hEc = _q(h[0]), _q(h[1])
    mean = inst.p * hE + inst.q * hEc
    return abs(mean) + inst.p * abs(hE - mean) + inst.q * abs(hEc - mean)


def dichotomy_check(inst: TwoPointInstance, g, h, k) -> Verdict:
    """Which alternative an admissible decomposition ``f = g + h + k`` falls under."""
    g = tuple(_q(x) for x in g)
    h = tuple(_q(x) for x in h)
    k = tuple(_q(x) for x in k)
    fE, fEc = inst.f()
    if g[0] + h[0] + k[0] != fE or g[1] + h[1] + k[1] != fEc:
        raise DomainError("g + h + k != f")
    if not all(0 <= x <= inst.box for x in k):
        raise DomainError("k outside [0, beta*lam]")
    mean_g = inst.p * g[0] + inst.q * g[1]
    on_E = g[0] != 0 or mean_g != 0
    on_Ec = g[1] != 0 or mean_g != 0
    loc = (inst.p if on_E else 0) + (inst.q if on_Ec else 0)
    var = two_point_variation(inst, h)
    bound = piecewise_bound(inst.p, inst.beta, inst.lam)
    if g != (0, 0):
        return Verdict("i", Q(loc), var, bound, loc == 1, False)
    return Verdict("ii", Q(loc), var, bound, var >= bound, var == bound)


def remark_asymptotic_bound(p, theta):
    """Normalized lower bound ``2 (1 - (1+theta) p)`` for ``g = 0`` decompositions."""
    return 2 * (1 - (1 + _q(theta)) * _q(p))


def localization_ratio(p, delta, lam=1):
    """``P(r < inf) / (||f||_1 / lam)`` for ``f = (1+delta) lam 1_E`` on ``F_n = sigma(E)``."""
    from .decomposition import first_passage
    from .filtration import NEVER, l1, probability

    p, delta, lam = _q(p), _q(delta), _q(lam)
    filt = Filtration.from_levels([[("E", None, p), ("Ec", None, 1 - p)]])
    f = [(1 + delta) * lam, Q(0)]
    r = first_passage(filt, f, lam)
    return probability(filt, r != NEVER) / (l1(filt, f) / lam)


def beta_grid(p, points: int = 20) -> list:
    """``points`` evenly spaced rationals spanning ``[0, 1/p]``."""
    p = _q(p)
    return [Q(k, points - 1) / p for k in range(points)]
