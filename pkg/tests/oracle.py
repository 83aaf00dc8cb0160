"""Slow, independent reference computations in ``fractions.Fraction``.

Everything here loops over leaves and atoms directly; nothing is shared
with the library beyond reading the tree's raw fields.
"""

from fractions import Fraction

INF = None  # stopping time "never"


def fr(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


class Tree:
    def __init__(self, filt):
        self.M = filt.horizon
        self.L = filt.n_leaves
        self.leaf_p = [fr(p) for p in filt.leaf_prob]
        # chain[w][n] = atom id of leaf w at level n (n = 0 is the whole space)
        self.chain = [[filt.ids[n][filt.anc[n][w]] if n else "<root>" for n in range(self.M + 1)]
                      for w in range(self.L)]

    def mean(self, values, n, w):
        """Average of ``values`` over the level-n atom containing leaf w; ``E_0 = 0``."""
        if n == 0:
            return Fraction(0)
        a = self.chain[w][n]
        num = den = Fraction(0)
        for v in range(self.L):
            if self.chain[v][n] == a:
                num += self.leaf_p[v] * values[v]
                den += self.leaf_p[v]
        return num / den

    def paths(self, f):
        f = [fr(x) for x in f]
        return [[Fraction(0)] * self.L] + [[self.mean(f, n, w) for w in range(self.L)]
                                           for n in range(1, self.M + 1)]

    def E(self, x):
        return sum(p * fr(v) for p, v in zip(self.leaf_p, x))


def decompose(filt, f, lam, theta):
    """Reference four-term decomposition; returns a dict of leaf lists."""
    T = Tree(filt)
    M, L = T.M, T.L
    f = [fr(x) for x in f]
    lam, theta = fr(lam), fr(theta)
    P = T.paths(f)
    df = [[P[n][w] - P[n - 1][w] if n else Fraction(0) for w in range(L)] for n in range(M + 1)]
    r = []
    for w in range(L):
        r.append(next((n for n in range(1, M + 1) if P[n][w] > lam), INF))
    eps = [[df[n][w] if r[w] == n else Fraction(0) for w in range(L)] for n in range(M + 2)]
    eps[M + 1] = [Fraction(0)] * L
    Lam = [[Fraction(0)] * L]
    for m in range(1, M + 1):
        row = [Lam[m - 1][w] + (T.mean(eps[m + 1], m, w) if m < M else Fraction(0)) for w in range(L)]
        Lam.append(row)
    s = [next((m for m in range(1, M + 1) if Lam[m][w] > theta * lam), INF) for w in range(L)]
    t = [r[w] if s[w] is INF else (s[w] if r[w] is INF else min(r[w], s[w])) for w in range(L)]

    def at(n, w):
        return f[w] if n is INF else P[n][w]

    g = [f[w] - at(t[w], w) for w in range(L)]
    h = [Fraction(0)] * L
    for j in range(1, M + 1):
        for w in range(L):
            if s[w] is INF or s[w] >= j:
                h[w] += eps[j][w] - T.mean(eps[j], j - 1, w)
    k_st, k_pr = [], []
    for w in range(L):
        rm = INF if r[w] is INF else r[w] - 1
        idx = rm if s[w] is INF else (s[w] if rm is INF else min(s[w], rm))
        k_st.append(at(idx, w))
        k_pr.append(Lam[M][w] if s[w] is INF else Lam[s[w] - 1][w])
    return dict(r=r, s=s, t=t, g=g, h=h, k_st=k_st, k_pr=k_pr, paths=P, Lambda=Lam, eps=eps)


def h_variation(filt, h):
    T = Tree(filt)
    P = T.paths(h)
    return [sum(abs(P[n][w] - P[n - 1][w]) for n in range(1, T.M + 1)) for w in range(T.L)]


def oscillations(filt, f):
    """``{atom_id: E[|f - f_A| 1_A] / P(A)}`` over every atom."""
    T = Tree(filt)
    f = [fr(x) for x in f]
    out = {}
    for n in range(1, T.M + 1):
        for w in range(T.L):
            a = T.chain[w][n]
            if a in out:
                continue
            leaves = [v for v in range(T.L) if T.chain[v][n] == a]
            pa = sum(T.leaf_p[v] for v in leaves)
            mean = sum(T.leaf_p[v] * f[v] for v in leaves) / pa
            out[a] = sum(T.leaf_p[v] * abs(f[v] - mean) for v in leaves) / pa
    return out


def transform(filt, f, a, N):
    T = Tree(filt)
    P = T.paths(f)
    return [sum(fr(a[n - 1]) * (P[n][w] - P[n - 1][w]) for n in range(1, N + 1)) for w in range(T.L)]


def tail(filt, g, lam):
    T = Tree(filt)
    return sum(p for p, v in zip(T.leaf_p, g) if abs(fr(v)) > fr(lam))


def phi_grid_min(p, lam, beta, n):
    """Direct Fraction evaluation of the two-point objective on a small lattice."""
    p, lam, beta = fr(p), fr(lam), fr(beta)
    q = 1 - p
    box = beta * lam
    best = None
    for i in range(n + 1):
        for j in range(n + 1):
            a, b = box * i / n, box * j / n
            v = abs(lam - p * a - q * b) + 2 * p * q * abs(lam / p - a + b)
            best = v if best is None else min(best, v)
    return best
