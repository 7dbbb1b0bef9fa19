"""Exact arithmetic in finite Grassmann (exterior) algebras over the rationals.

An element of the algebra on ``L`` anticommuting generators ``e1 .. eL`` is
kept in a unique canonical form: a map from strictly increasing generator
index tuples to nonzero rational coefficients.  Equality is therefore a plain
map comparison.  All operations are pure; elements are never mutated after
construction.
"""

from __future__ import annotations

from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Mapping


class GrassmannError(Exception):
    """Base class for Grassmann arithmetic errors."""


class NonHomogeneous(GrassmannError):
    """A mixed-parity element was used where a single parity is required."""


class ShrinkNotAllowed(GrassmannError):
    """An element was embedded into an algebra with too few generators."""


class Parity(IntEnum):
    EVEN = 0
    ODD = 1


Rat = Fraction


def _wedge(a: tuple, b: tuple):
    """Merge two increasing index tuples with the anticommutation sign.

    Returns ``(indices, sign)``, or ``None`` when a generator repeats.
    """
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    i = j = 0
    sign = 1
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] hops over the len(a)-i remaining factors of a
            if (len(a) - i) & 1:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


class GrassmannElement:
    __slots__ = ("num_generators", "terms")

    def __init__(self, num_generators: int, terms: Mapping[tuple, Rat] | None = None):
        if num_generators < 0:
            raise GrassmannError("generator count must be nonnegative")
        canon = {}
        if terms:
            for key, coeff in terms.items():
                key = tuple(key)
                if any(key[i] >= key[i + 1] for i in range(len(key) - 1)):
                    raise GrassmannError(f"index tuple not strictly increasing: {key}")
                if key and (key[0] < 1 or key[-1] > num_generators):
                    raise GrassmannError(f"generator index out of range: {key}")
                coeff = Fraction(coeff)
                if coeff:
                    canon[key] = canon.get(key, Fraction(0)) + coeff
                    if not canon[key]:
                        del canon[key]
        self.num_generators = num_generators
        self.terms = canon

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, num_generators: int = 0) -> "GrassmannElement":
        return cls(num_generators, {})

    @classmethod
    def scalar(cls, value, num_generators: int = 0) -> "GrassmannElement":
        return cls(num_generators, {(): Fraction(value)})

    @classmethod
    def one(cls, num_generators: int = 0) -> "GrassmannElement":
        return cls.scalar(1, num_generators)

    @classmethod
    def generator(cls, index: int, num_generators: int) -> "GrassmannElement":
        return cls(num_generators, {(index,): Fraction(1)})

    @classmethod
    def monomial(cls, indices: Iterable[int], num_generators: int, coeff=1) -> "GrassmannElement":
        return cls(num_generators, {tuple(indices): Fraction(coeff)})

    # -- ring structure ----------------------------------------------------

    def _pair(self, other):
        """Embed both operands into the larger algebra."""
        L = max(self.num_generators, other.num_generators)
        return self.embed(L), other.embed(L), L

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        a, b, L = self._pair(other)
        terms = dict(a.terms)
        for key, coeff in b.terms.items():
            acc = terms.get(key, Fraction(0)) + coeff
            if acc:
                terms[key] = acc
            else:
                terms.pop(key, None)
        return GrassmannElement(L, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return GrassmannElement(self.num_generators, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        a, b, L = self._pair(other)
        terms: dict = {}
        for ka, ca in a.terms.items():
            for kb, cb in b.terms.items():
                merged = _wedge(ka, kb)
                if merged is None:
                    continue
                key, sign = merged
                acc = terms.get(key, Fraction(0)) + sign * ca * cb
                if acc:
                    terms[key] = acc
                else:
                    terms.pop(key, None)
        return GrassmannElement(L, terms)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, value) -> "GrassmannElement":
        value = Fraction(value)
        if not value:
            return GrassmannElement.zero(self.num_generators)
        return GrassmannElement(self.num_generators, {k: value * c for k, c in self.terms.items()})

    # alias used by the generic series code for any coefficient space
    scale_rat = scale

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- queries ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def body(self) -> Rat:
        """Coefficient of the empty generator product."""
        return self.terms.get((), Fraction(0))

    def parity(self, zero_default: Parity = Parity.EVEN) -> Parity:
        """Parity of a homogeneous element.

        The sign function is double-valued at zero, so the zero element
        reports the caller-supplied default.
        """
        if not self.terms:
            return zero_default
        parities = {len(k) & 1 for k in self.terms}
        if len(parities) > 1:
            raise NonHomogeneous(f"mixed-parity element: {self}")
        return Parity(parities.pop())

    def parity_parts(self):
        """Split into homogeneous (parity, part) pieces, zero parts omitted."""
        even = {k: c for k, c in self.terms.items() if not len(k) & 1}
        odd = {k: c for k, c in self.terms.items() if len(k) & 1}
        parts = []
        if even:
            parts.append((Parity.EVEN, GrassmannElement(self.num_generators, even)))
        if odd:
            parts.append((Parity.ODD, GrassmannElement(self.num_generators, odd)))
        return parts

    def embed(self, num_generators: int) -> "GrassmannElement":
        """Reinterpret in the algebra on ``num_generators`` generators."""
        if num_generators == self.num_generators:
            return self
        top = max((k[-1] for k in self.terms if k), default=0)
        if num_generators < top:
            raise ShrinkNotAllowed(
                f"element uses generator e{top}, cannot embed into {num_generators} generators"
            )
        return GrassmannElement(num_generators, self.terms)

    def inverse(self) -> "GrassmannElement":
        """Multiplicative inverse of an element with invertible body.

        Works for any (even or inhomogeneous) element whose body is nonzero:
        the soul is nilpotent, so the geometric series terminates.
        """
        b = self.body()
        if not b:
            raise GrassmannError("element with zero body is not invertible")
        soul = self - GrassmannElement.scalar(b, self.num_generators)
        result = GrassmannElement.scalar(1 / b, self.num_generators)
        power = GrassmannElement.one(self.num_generators)
        while True:
            power = (power * soul).scale(Fraction(-1) / b)
            if power.is_zero():
                break
            result = result + power.scale(1 / b)
        return result

    # -- rendering -----------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            coeff = self.terms[key]
            if key:
                mono = "".join(f"e{i}" for i in key)
                parts.append(f"{coeff}*{mono}")
            else:
                parts.append(str(coeff))
        return "+".join(parts)

    def __repr__(self):
        return f"GrassmannElement(L={self.num_generators}, {self})"


def parse_grassmann(text: str, num_generators: int) -> GrassmannElement:
    """Parse the textual coefficient form, e.g. ``3+-1/2*e1e3``."""
    text = text.strip().replace(" ", "")
    if text in ("0", ""):
        return GrassmannElement.zero(num_generators)
    # split on '+' but keep leading '-' of each chunk
    chunks = text.replace("+-", "+MINUS").split("+")
    terms: dict = {}
    for chunk in chunks:
        neg = chunk.startswith("MINUS")
        if neg:
            chunk = chunk[5:]
        if chunk.startswith("-"):
            neg = not neg
            chunk = chunk[1:]
        if "*" in chunk:
            num, mono = chunk.split("*", 1)
        elif chunk.startswith("e"):
            num, mono = "1", chunk
        else:
            num, mono = chunk, ""
        coeff = Fraction(num)
        if neg:
            coeff = -coeff
        key = tuple(int(p) for p in mono.split("e") if p) if mono else ()
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return GrassmannElement(num_generators, terms)
