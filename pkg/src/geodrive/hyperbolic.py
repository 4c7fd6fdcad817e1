"""Poincare-disk geometry and the Bolza side-pairing group.

Conventions: the disk {|z| < 1} carries the metric g(z) = 4/(1-|z|^2)^2
(constant curvature -1).  Isometries are Mobius maps

    z -> (a z + b) / (conj(b) z + conj(a)),   |a|^2 - |b|^2 = 1,

i.e. elements of SU(1,1) modulo sign.  Covectors (momenta, stored as the
complex number p = p_1 + i p_2) push forward with the inverse-conjugate
Jacobian, p -> p / conj(M'(z)), which preserves g^{-1}|p|^2.

The Bolza surface is the quotient of the disk by the group generated by
four hyperbolic translations gamma_1..gamma_4 of translation length
2*acosh(1+sqrt(2)), rotated copies of each other by pi/4.  Its fundamental
domain is the regular octagon bounded by eight geodesic arcs; membership
uses the closed domain (boundary points count as inside).

Everything here is generic over plain floats/complex and mpmath types, so
the same code path serves both fast double-precision work and the
high-precision propagation needed for long geodesics.
"""

import cmath
import math

import mpmath as mp
from mpmath.libmp import mpf_neg

from . import ReductionError, ValidationError

# generator indices in canonical order; negative means inverse
WORD_ORDER = (1, 2, 3, 4, -1, -2, -3, -4)


def _is_mp(x):
    return isinstance(x, (mp.mpf, mp.mpc))


def _atanh(x):
    return mp.atanh(x) if _is_mp(x) else math.atanh(x)


# mpmath rounds every operation to the ambient working precision, including
# unary minus and conjugation (which routes through the rounding mpc
# constructor).  Structural operations like inverting a group element must
# not depend on who calls them, so they use these exact versions.

def _neg_exact(x):
    return mp.fneg(x, exact=True) if _is_mp(x) else -x


def _conj_exact(x):
    if isinstance(x, mp.mpc):
        re, im = x._mpc_
        return mp.make_mpc((re, mpf_neg(im)))
    return x.conjugate()


def metric_factor(z):
    """Conformal factor g(z) = 4/(1-|z|^2)^2 of the disk metric.

    Raises ValidationError outside the open disk.
    """
    u = abs(z) ** 2
    if u >= 1:
        raise ValidationError(f"point |z| = {float(abs(z))!r} is not inside the unit disk")
    return 4 / (1 - u) ** 2


def hyperbolic_distance(z1, z2):
    """Geodesic distance d(z1, z2) = 2*atanh |(z1-z2)/(1 - z1*conj(z2))|."""
    for z in (z1, z2):
        if abs(z) >= 1:
            raise ValidationError("distance arguments must lie inside the unit disk")
    w = (z1 - z2) / (1 - z1 * z2.conjugate())
    return 2 * _atanh(abs(w))


def kinetic_energy(z, p):
    """E = g^{-1}(z) |p|^2 / 2, the cogeodesic Hamiltonian."""
    return (1 - abs(z) ** 2) ** 2 * abs(p) ** 2 / 8


class MobiusMap:
    """Disk isometry z -> (a z + b)/(conj(b) z + conj(a)) with |a|^2-|b|^2 = 1."""

    __slots__ = ("a", "b")

    def __init__(self, a, b, check=True):
        if check:
            norm = abs(a) ** 2 - abs(b) ** 2
            scale = abs(a) ** 2 + abs(b) ** 2
            if abs(norm - 1) > 1e-9 * scale:
                raise ValidationError(
                    f"not an SU(1,1) pair: |a|^2-|b|^2 = {float(norm)!r}"
                )
        self.a = a
        self.b = b

    def __call__(self, z):
        return (self.a * z + self.b) / (self.b.conjugate() * z + self.a.conjugate())

    def derivative(self, z):
        """M'(z) = 1/(conj(b) z + conj(a))^2."""
        den = self.b.conjugate() * z + self.a.conjugate()
        return 1 / (den * den)

    def push_forward(self, z, p):
        """Image of the covector p based at z: p / conj(M'(z))."""
        den = self.b.conjugate() * z + self.a.conjugate()
        return p * (den * den).conjugate()

    def compose(self, other):
        """self after other: (self.compose(other))(z) = self(other(z))."""
        a = self.a * other.a + self.b * other.b.conjugate()
        b = self.a * other.b + self.b * other.a.conjugate()
        return MobiusMap(a, b, check=False)

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        return MobiusMap(_conj_exact(self.a), _neg_exact(self.b), check=False)

    def su11_residual(self):
        """|a|^2 - |b|^2 - 1; zero for an exact group element."""
        return abs(self.a) ** 2 - abs(self.b) ** 2 - 1

    def __repr__(self):
        return f"MobiusMap(a={self.a!r}, b={self.b!r})"

    @staticmethod
    def identity(digits=None):
        if digits:
            with mp.workdps(digits):
                return MobiusMap(mp.mpc(1), mp.mpc(0), check=False)
        return MobiusMap(complex(1), complex(0), check=False)

    @staticmethod
    def rotation(phi, digits=None):
        """z -> e^{i phi} z."""
        if digits:
            with mp.workdps(digits):
                return MobiusMap(mp.exp(0.5j * mp.mpf(phi)), mp.mpc(0), check=False)
        return MobiusMap(cmath.exp(0.5j * phi), complex(0), check=False)

    @staticmethod
    def translation_to(z0, digits=None):
        """Origin -> z0 along the radial geodesic: z -> (z + z0)/(1 + conj(z0) z)."""
        if digits:
            with mp.workdps(digits):
                z0 = mp.mpc(z0)
                a = 1 / mp.sqrt(1 - abs(z0) ** 2)
                return MobiusMap(a, z0 * a, check=False)
        if abs(z0) >= 1:
            raise ValidationError("translation target must lie inside the unit disk")
        a = 1 / math.sqrt(1 - abs(z0) ** 2)
        return MobiusMap(complex(a), z0 * a, check=False)


class FundamentalOctagon:
    """The regular hyperbolic octagon bounding the Bolza fundamental domain.

    Eight geodesic arcs, circles of Euclidean radius r centred at
    c_j = c e^{i(j-1)pi/4} with c = sqrt((3+2sqrt2)/(2+2sqrt2)) and
    r = (2+2sqrt2)^{-1/2}; c^2 - r^2 = 1 so each arc meets the unit circle
    at right angles.  A point is in the closed domain iff it lies outside
    or on all eight arc circles.
    """

    __slots__ = ("c", "r", "vertex_radius", "centers", "digits")

    def __init__(self, digits=None):
        self.digits = digits
        if digits:
            with mp.workdps(digits):
                s = mp.sqrt(2)
                self.c = mp.sqrt((3 + 2 * s) / (2 + 2 * s))
                self.r = 1 / mp.sqrt(2 + 2 * s)
                self.vertex_radius = mp.power(2, mp.mpf(-1) / 4)
                self.centers = tuple(
                    self.c * mp.exp(1j * mp.pi * (j) / 4) for j in range(8)
                )
        else:
            s = math.sqrt(2)
            self.c = math.sqrt((3 + 2 * s) / (2 + 2 * s))
            self.r = 1 / math.sqrt(2 + 2 * s)
            self.vertex_radius = 2 ** -0.25
            self.centers = tuple(
                self.c * cmath.exp(1j * math.pi * j / 4) for j in range(8)
            )

    def contains(self, z, tol=1e-12):
        """Closed-domain membership, with tol of slack toward inclusion."""
        rmin = self.r - tol
        for cj in self.centers:
            if abs(z - cj) < rmin:
                return False
        return True

    def edge_depths(self, z):
        """|z - c_j| - r for each arc; negative means outside through arc j."""
        return [abs(z - cj) - self.r for cj in self.centers]

    def min_depth(self, z):
        return min(self.edge_depths(z))


class BolzaGroup:
    """The four side-pairing translations of the Bolza octagon and inverses.

    gamma_1 has matrix [[a0, b0], [b0, a0]] with a0 = 1+sqrt2 = cosh(l/2),
    b0 = sqrt(2+2sqrt2) = sinh(l/2); gamma_mu is gamma_1 conjugated by the
    rotation through (mu-1)pi/4, i.e. b0 picks up the phase
    e^{i(mu-1)pi/4}.  Words are lists of signed indices, +mu for gamma_mu
    and -mu for its inverse, in order of application.
    """

    def __init__(self, digits=None):
        self.digits = digits
        if digits:
            # mpmath rounds every operation (even negation) to the ambient
            # precision, so the inverses must be built inside the context
            with mp.workdps(digits):
                a0 = mp.mpc(1 + mp.sqrt(2))
                b0 = mp.sqrt(2 + 2 * mp.sqrt(2))
                phases = [mp.exp(1j * mp.pi * (mu - 1) / 4) for mu in range(1, 5)]
                gens = [MobiusMap(a0, b0 * ph, check=False) for ph in phases]
                invs = [g.inverse() for g in gens]
                self.translation_length = 2 * mp.acosh(1 + mp.sqrt(2))
        else:
            a0 = complex(1 + math.sqrt(2))
            b0 = math.sqrt(2 + 2 * math.sqrt(2))
            phases = [cmath.exp(1j * math.pi * (mu - 1) / 4) for mu in range(1, 5)]
            gens = [MobiusMap(a0, b0 * ph, check=False) for ph in phases]
            invs = [g.inverse() for g in gens]
            self.translation_length = 2 * math.acosh(1 + math.sqrt(2))
        self._maps = {}
        for mu, (g, gi) in enumerate(zip(gens, invs), start=1):
            self._maps[mu] = g
            self._maps[-mu] = gi
        self.octagon = FundamentalOctagon(digits)

    def element(self, idx):
        return self._maps[idx]

    def items(self):
        """(index, map) pairs in canonical tie-break order."""
        return [(idx, self._maps[idx]) for idx in WORD_ORDER]

    def word_map(self, word):
        """Mobius map of a product word, leftmost factor applied last.

        word_map([1, -2]) is gamma_1 gamma_2^{-1} as a matrix product, i.e.
        the map z -> gamma_1(gamma_2^{-1}(z)).
        """
        with mp.workdps(self.digits or 15):
            m = MobiusMap.identity(self.digits)
            for idx in word:
                m = m @ self._maps[idx]
            return m

    def relation_product(self):
        """gamma_1 gamma_2^{-1} gamma_3 gamma_4^{-1} gamma_1^{-1} gamma_2 gamma_3^{-1} gamma_4.

        Equals the identity up to overall sign for the true group.
        """
        return self.word_map([1, -2, 3, -4, -1, 2, -3, 4])


_GROUP_CACHE = {}


def bolza_group(digits=None):
    """Cached BolzaGroup at the requested decimal precision (None = double)."""
    if digits not in _GROUP_CACHE:
        _GROUP_CACHE[digits] = BolzaGroup(digits)
    return _GROUP_CACHE[digits]


def in_fundamental_domain(z, octagon=None, tol=1e-12):
    """Closed-domain membership test for the Bolza octagon."""
    if octagon is None:
        octagon = bolza_group().octagon
    return octagon.contains(z, tol)


def reduce_to_domain(z, p=0.0, group=None, max_word_length=64):
    """Translate a phase point into the fundamental octagon.

    Tries the eight side pairings at each stage: any image already in the
    closed domain wins (lowest canonical index on ties); otherwise the
    image closest to the origin is taken and must strictly descend.  The
    momentum is pushed forward alongside.  Returns (z, p, word) where word
    lists the applied signed generator indices in order.
    """
    if group is None:
        group = bolza_group()
    if abs(z) >= 1:
        raise ValidationError("cannot reduce a point outside the unit disk")
    with mp.workdps(group.digits or 15):
        octagon = group.octagon
        word = []
        for _ in range(max_word_length):
            if octagon.contains(z):
                return z, p, word
            inside = None
            best = None
            for idx, g in group.items():
                img = g(z)
                if octagon.contains(img):
                    inside = (idx, g, img)
                    break
                m = abs(img)
                if best is None or m < best[0]:
                    best = (m, idx, g, img)
            if inside is not None:
                idx, g, img = inside
            else:
                m, idx, g, img = best
                if m >= abs(z):
                    raise ReductionError(
                        f"greedy reduction stalled at z = {complex(z)!r}"
                    )
            p = g.push_forward(z, p)
            z = img
            word.append(idx)
        if octagon.contains(z):
            return z, p, word
    raise ReductionError(
        f"word length limit {max_word_length} exceeded while reducing z = {complex(z)!r}"
    )
