"""Exact integer polynomials and the coinvariant quotient Z[x1..xn]/Jn.

Jn is the ideal generated by the elementary symmetric polynomials of positive
degree.  Under lex order x1 > x2 > ... > xn its reduced Groebner basis is

    g_k = h_k(x_k, ..., x_n),   k = 1..n,

with leading term x_k**k (h_k is the complete homogeneous polynomial).  The
normal forms are therefore spanned by monomials with x1 absent and the
exponent of x_{k+1} at most k, which is the Artin basis with n! elements.

Everything here is exact: coefficients are Python ints, no tolerances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, Tuple

from .errors import IndexOutOfRange, TooLarge

Exp = Tuple[int, ...]

PI_STAR_B_MAX_N = 4
DN_MAX_N = 5


def _grlex_key(e: Exp):
    return (sum(e), e)


class IntPoly:
    """Sparse polynomial in ``nvars`` variables with integer coefficients.

    Zero coefficients are never stored.  Iteration yields terms in
    descending graded-lex order.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Dict[Exp, int] | None = None):
        self.nvars = nvars
        self.terms: Dict[Exp, int] = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ValueError(f"exponent {e} has wrong length for {nvars} variables")
                if any(k < 0 for k in e):
                    raise ValueError(f"negative exponent in {e}")
                c = int(c)
                if c:
                    self.terms[tuple(e)] = c

    # constructors
    @classmethod
    def const(cls, nvars: int, c: int) -> "IntPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "IntPoly":
        """The variable x_{i+1} (0-based ``i``)."""
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def monomial(cls, exps: Iterable[int], c: int = 1) -> "IntPoly":
        e = tuple(exps)
        return cls(len(e), {e: c})

    # arithmetic
    def _coerce(self, other) -> "IntPoly":
        if isinstance(other, IntPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        if isinstance(other, int):
            return IntPoly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return IntPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return IntPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return IntPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[Exp, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return IntPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = IntPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = IntPoly.const(self.nvars, other)
        if not isinstance(other, IntPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __iter__(self) -> Iterator[Tuple[Exp, int]]:
        for e in sorted(self.terms, key=_grlex_key, reverse=True):
            yield e, self.terms[e]

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def substitute(self, images: list["IntPoly"]) -> "IntPoly":
        """Replace x_i by ``images[i]`` (all in a common ring)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per variable")
        nv = images[0].nvars
        out = IntPoly(nv)
        cache: dict = {}
        for e, c in self.terms.items():
            term = IntPoly.const(nv, c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = images[i] ** k
                    term = term * cache[key]
            out = out + term
        return out

    def swap(self, i: int, j: int) -> "IntPoly":
        out = {}
        for e, c in self.terms.items():
            e2 = list(e)
            e2[i], e2[j] = e2[j], e2[i]
            out[tuple(e2)] = c
        return IntPoly(self.nvars, out)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self:
            mono = "*".join(
                f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}" for i, k in enumerate(e) if k
            )
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)


# ---------------------------------------------------------------- symmetric

def elementary_symmetric(n: int, k: int) -> IntPoly:
    out = {}
    for idx in itertools.combinations(range(n), k):
        e = [0] * n
        for i in idx:
            e[i] = 1
        out[tuple(e)] = 1
    return IntPoly(n, out)


def complete_homogeneous(n: int, k: int, first: int = 0) -> IntPoly:
    """h_k in the variables x_{first+1}..x_n, embedded in n variables."""
    out = {}
    m = n - first
    for combo in itertools.combinations_with_replacement(range(m), k):
        e = [0] * n
        for i in combo:
            e[first + i] += 1
        out[tuple(e)] = 1
    return IntPoly(n, out)


@lru_cache(maxsize=None)
def _rewrite_tails(n: int) -> tuple:
    """tails[k] = x_{k+1}^{k+1} - h_{k+1}(x_{k+1}..x_n)  (0-based k).

    The leading monomial of h is cancelled, so every monomial of the tail is
    lex-smaller than x_{k+1}^{k+1}.
    """
    tails = []
    for k in range(n):
        g = complete_homogeneous(n, k + 1, first=k)
        lead = [0] * n
        lead[k] = k + 1
        tails.append(IntPoly.monomial(lead) - g)
    return tuple(tails)


# ---------------------------------------------------------------- quotient

def artin_basis(n: int) -> list[Tuple[int, ...]]:
    """Exponent vectors (j_1..j_{n-1}) with 0 <= j_k <= k, on x2..xn."""
    return [tuple(e) for e in itertools.product(*(range(k + 1) for k in range(1, n)))]


@dataclass(frozen=True)
class CoinvariantElement:
    n: int
    coords: Dict[Tuple[int, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        for key, c in self.coords.items():
            if len(key) != self.n - 1:
                raise ValueError(f"basis key {key} has wrong length")
            if any(j < 0 or j > k + 1 for k, j in enumerate(key)):
                raise ValueError(f"basis key {key} violates exponent bounds")
            if c == 0:
                raise ValueError("zero coordinates are not stored")

    def is_zero(self) -> bool:
        return not self.coords

    def lift(self) -> IntPoly:
        return IntPoly(self.n, {(0,) + key: c for key, c in self.coords.items()})

    def coefficient(self, key: Tuple[int, ...]) -> int:
        return self.coords.get(tuple(key), 0)

    def to_json(self) -> dict:
        return {"n": self.n, "coords": [[list(k), v] for k, v in sorted(self.coords.items())]}


def reduce_mod_jn(p: IntPoly, n: int | None = None) -> CoinvariantElement:
    """Normal form of ``p`` modulo Jn, as coordinates in the Artin basis."""
    n = p.nvars if n is None else n
    if p.nvars != n:
        raise ValueError("polynomial has the wrong number of variables")
    tails = _rewrite_tails(n)
    work = dict(p.terms)
    # Rewriting x_k^k only produces lex-smaller terms and never touches
    # x_1..x_{k-1}, so variables can be cleared one at a time.
    for k in range(n):
        cap = k + 1
        while True:
            bad = [e for e in work if e[k] >= cap]
            if not bad:
                break
            for e in bad:
                c = work.pop(e, 0)
                if not c:  # cancelled by an earlier rewrite in this pass
                    continue
                rest = list(e)
                rest[k] -= cap
                for te, tc in tails[k].terms.items():
                    ne = tuple(a + b for a, b in zip(rest, te))
                    v = work.get(ne, 0) + c * tc
                    if v:
                        work[ne] = v
                    else:
                        work.pop(ne, None)
    coords = {e[1:]: c for e, c in work.items() if c}
    return CoinvariantElement(n, coords)


def quotient_rank(n: int) -> int:
    return len(artin_basis(n))


# ---------------------------------------------------------------- Vandermonde

def vandermonde_product(n: int) -> IntPoly:
    out = IntPoly.const(n, 1)
    for i in range(n):
        for j in range(i):
            out = out * (IntPoly.var(n, i) - IntPoly.var(n, j))
    return out


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def vandermonde_det(n: int) -> IntPoly:
    """Leibniz expansion of det(x_i^(k-1))."""
    out = {}
    for perm in itertools.permutations(range(n)):
        # row i picks column perm[i], i.e. x_i^perm[i]
        out[tuple(perm)] = out.get(tuple(perm), 0) + _perm_sign(perm)
    return IntPoly(n, out)


def vandermonde(n: int) -> IntPoly:
    if n < 2:
        raise IndexOutOfRange("vandermonde needs n >= 2")
    prod = vandermonde_product(n)
    det = vandermonde_det(n)
    if prod != det:  # two independent code paths must agree exactly
        raise AssertionError("Vandermonde product and determinant disagree")
    return prod


def staircase_exponent(n: int) -> Tuple[int, ...]:
    """Artin key of x2 x3^2 ... xn^(n-1)."""
    return tuple(range(1, n))


# ---------------------------------------------------------------- q_k

def q_poly(k: int, n: int) -> IntPoly:
    """q_k(x) = sum_{j=0..k} (-1)^j C(n, k-j) x^j, univariate."""
    if not 0 <= k <= n:
        raise IndexOutOfRange(f"q_poly needs 0 <= k <= n, got k={k}, n={n}")
    return IntPoly(1, {(j,): (-1) ** j * math.comb(n, k - j) for j in range(k + 1)})


# ---------------------------------------------------------------- checks

@dataclass
class Witness:
    name: str
    n: int
    passed: bool
    lhs: dict
    rhs: dict
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "identity": self.name,
            "n": self.n,
            "passed": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "detail": self.detail,
        }


def verify_dn(n: int, cap: int = DN_MAX_N) -> Witness:
    if not 2 <= n <= cap:
        raise TooLarge(f"verify_dn supports 2 <= n <= {cap}")
    got = reduce_mod_jn(vandermonde(n))
    want = CoinvariantElement(n, {staircase_exponent(n): math.factorial(n)})
    return Witness("dn", n, got == want, got.to_json(), want.to_json())


def verify_nun(n: int, cap: int = DN_MAX_N) -> Witness:
    if not 2 <= n <= cap:
        raise TooLarge(f"verify_nun supports 2 <= n <= {cap}")
    xn = IntPoly.var(n, n - 1)
    prod = IntPoly.const(n, 1)
    for j in range(n - 1):
        prod = prod * (xn - IntPoly.var(n, j))
    lhs = reduce_mod_jn(prod)
    rhs = reduce_mod_jn(xn ** (n - 1) * n)
    ok = reduce_mod_jn(prod - xn ** (n - 1) * n).is_zero()
    return Witness("nun", n, ok, lhs.to_json(), rhs.to_json())


# ---------------------------------------------------------------- exterior algebra

@dataclass
class SymbolicUnitaryClass:
    """Element of an exterior algebra over generators alpha_1..alpha_n whose
    coefficients are polynomials.  Keys are sorted index tuples."""

    n: int
    parts: Dict[Tuple[int, ...], IntPoly] = field(default_factory=dict)

    def wedge(self, other: "SymbolicUnitaryClass") -> "SymbolicUnitaryClass":
        out: Dict[Tuple[int, ...], IntPoly] = {}
        for a, pa in self.parts.items():
            for b, pb in other.parts.items():
                if set(a) & set(b):
                    continue
                merged = a + b
                # sign of the sorting permutation = parity of inversions
                inv = sum(1 for x in a for y in b if x > y)
                key = tuple(sorted(merged))
                term = pa * pb
                if inv % 2:
                    term = -term
                out[key] = out[key] + term if key in out else term
        return SymbolicUnitaryClass(self.n, {k: v for k, v in out.items() if not v.is_zero()})

    def top(self) -> IntPoly:
        key = tuple(range(self.n))
        nv = next(iter(self.parts.values())).nvars if self.parts else self.n
        return self.parts.get(key, IntPoly(nv))


def pullback_beta(k: int, n: int) -> SymbolicUnitaryClass:
    """pi^* beta_k = sum_i alpha_i l_i q_{k-1}(l_i), polynomial in l_1..l_n."""
    q = q_poly(k - 1, n)
    parts = {}
    for i in range(n):
        li = IntPoly.var(n, i)
        parts[(i,)] = li * q.substitute([li])
    return SymbolicUnitaryClass(n, parts)


@dataclass
class PiStarB:
    n: int
    top_coefficient: CoinvariantElement
    expected: CoinvariantElement
    passed: bool

    @property
    def scalar(self) -> int:
        return self.top_coefficient.coefficient(staircase_exponent(self.n))

    def to_json(self) -> dict:
        return {
            "identity": "pi_star_b",
            "n": self.n,
            "passed": self.passed,
            "coefficient": self.scalar,
            "expected_sign": (-1) ** (self.n * (self.n - 1) // 2),
            "lhs": self.top_coefficient.to_json(),
            "rhs": self.expected.to_json(),
        }


def pi_star_b(n: int) -> PiStarB:
    """Top exterior coefficient of prod_k pi^* beta_k, reduced with l = 1 + u."""
    if n < 1:
        raise IndexOutOfRange("n must be positive")
    if n > PI_STAR_B_MAX_N:
        raise TooLarge(f"pi_star_b is capped at n = {PI_STAR_B_MAX_N}")
    prod = pullback_beta(1, n)
    for k in range(2, n + 1):
        prod = prod.wedge(pullback_beta(k, n))
    coeff_l = prod.top()
    shift = [IntPoly.var(n, i) + 1 for i in range(n)]
    coeff_u = coeff_l.substitute(shift)
    # prod l_i = 1 holds in the quotient: the e_k(l) equal C(n, k), i.e. the
    # e_k(u) vanish, which is exactly the ideal Jn in the u variables.
    got = reduce_mod_jn(coeff_u)
    sign = (-1) ** (n * (n - 1) // 2)
    want = CoinvariantElement(n, {staircase_exponent(n): sign * math.factorial(n)}) if n > 1 \
        else CoinvariantElement(n, {(): 1})
    return PiStarB(n, got, want, got == want and not got.is_zero())


def run_report(n_max: int) -> dict:
    """All coinvariant-algebra identities up to ``n_max``.  pi_star_b past its cap is
    reported as skipped with the TooLarge reason rather than aborting."""
    checks = []
    for n in range(2, min(n_max, DN_MAX_N) + 1):
        checks.append(verify_dn(n).to_json())
        checks.append(verify_nun(n).to_json())
    errors = []
    for n in range(2, n_max + 1):
        try:
            checks.append(pi_star_b(n).to_json())
        except TooLarge as exc:
            errors.append({"identity": "pi_star_b", "n": n, "error": "TooLarge", "detail": str(exc)})
    if n_max > DN_MAX_N:
        errors.append({"identity": "dn/nun", "n": n_max, "error": "TooLarge",
                       "detail": f"dn and nun capped at n = {DN_MAX_N}"})
    return {
        "n_max": n_max,
        "checks": checks,
        "errors": errors,
        "all_passed": all(c["passed"] for c in checks),
    }
