"""Exact integer and modular arithmetic.

Everything here runs on Python integers, so intermediates never wrap; the
checked bound on modulus products only guards against plans that would be
unusably large downstream.  All functions are pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotCoprimeError, SearchExhaustedError

# Product moduli are kept within a 128-bit budget; larger plans would defeat
# float64 phase resolution long before arithmetic became an issue.
_MAX_PRODUCT = 1 << 127

# Witnesses proving primality for every n < 3.3e24 (covers 64-bit inputs).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    if a == 0 and b == 0:
        raise ValueError("egcd(0, 0) is undefined")
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def mod_inverse(a: int, m: int) -> int:
    """Inverse of a modulo m, in [1, m).  Requires gcd(a, m) = 1."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    g, x, _ = egcd(a % m, m)
    if g != 1:
        raise NotCoprimeError(f"{a} has no inverse mod {m} (gcd={g})")
    return x % m


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all 64-bit inputs."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def garner2(r1: int, r2: int, m1: int, m2: int) -> int:
    """Two-residue reconstruction: the unique f in [0, m1*m2) with
    f = r1 (mod m1) and f = r2 (mod m2).

    Computed as f = r1 + m1 * ((r2 - r1) * m1^-1 mod m2); the difference is
    normalized into [0, m2) before the multiply so machine remainder
    semantics on negatives never enter.
    """
    if not (0 <= r1 < m1 and 0 <= r2 < m2):
        raise ValueError(f"residues ({r1}, {r2}) out of range for ({m1}, {m2})")
    inv = mod_inverse(m1, m2)  # raises NotCoprimeError when gcd(m1, m2) != 1
    u = ((r2 - r1) % m2) * inv % m2
    return r1 + u * m1


@dataclass(frozen=True)
class ModTriple:
    """Three pairwise coprime moduli with precomputed Garner inverses.

    gamma12 = m1^-1 mod m2 and gamma23 = (m1*m2)^-1 mod m3 are the only
    inverses mixed-radix reconstruction needs.
    """

    m1: int
    m2: int
    m3: int
    gamma12: int
    gamma23: int
    M: int

    @classmethod
    def create(cls, m1: int, m2: int, m3: int) -> "ModTriple":
        for m in (m1, m2, m3):
            if m < 2:
                raise ValueError(f"modulus must be >= 2, got {m}")
        for a, b in ((m1, m2), (m1, m3), (m2, m3)):
            if math.gcd(a, b) != 1:
                raise NotCoprimeError(f"moduli {a} and {b} are not coprime")
        product = m1 * m2 * m3
        if product > _MAX_PRODUCT:
            raise ValueError(f"modulus product {product} exceeds the 128-bit budget")
        return cls(
            m1=m1,
            m2=m2,
            m3=m3,
            gamma12=mod_inverse(m1, m2),
            gamma23=mod_inverse(m1 * m2, m3),
            M=product,
        )

    @property
    def moduli(self) -> tuple[int, int, int]:
        return (self.m1, self.m2, self.m3)


def garner3_parts(r1: int, r2: int, r3: int, triple: ModTriple) -> tuple[int, int, int]:
    """Mixed-radix reconstruction, returning (f, u2, u3).

    u2 and u3 are the mixed-radix digits: f = r1 + u2*m1 + u3*m1*m2.  They
    are exposed so audit records can be replayed digit by digit.
    """
    m1, m2, m3 = triple.m1, triple.m2, triple.m3
    if not (0 <= r1 < m1 and 0 <= r2 < m2 and 0 <= r3 < m3):
        raise ValueError(f"residues ({r1}, {r2}, {r3}) out of range for {triple.moduli}")
    u2 = (r2 - r1) % m2 * triple.gamma12 % m2
    u3 = (r3 - r1 - u2 * m1) % m3 * triple.gamma23 % m3
    return r1 + u2 * m1 + u3 * m1 * m2, u2, u3


def garner3(r1: int, r2: int, r3: int, triple: ModTriple) -> int:
    """The unique f in [0, triple.M) with f = ri (mod mi) for i = 1, 2, 3."""
    return garner3_parts(r1, r2, r3, triple)[0]


def find_coprime_moduli(
    target: int,
    count: int,
    min_product: int,
    exclusions: tuple[int, ...] | frozenset | set = (),
) -> list[int]:
    """Select `count` distinct primes near `target`, product >= min_product.

    The search alternates outward from the target, starting at-or-above,
    then below, and so on; excluded values are skipped.  If the nearest
    primes multiply out too small, the smallest pick is replaced by the
    next prime above the largest until the product qualifies.  The scan is
    capped at radius 10*target.  Returned sorted ascending.
    """
    if target < 2:
        raise ValueError(f"target must be >= 2, got {target}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    excluded = set(exclusions)
    limit_hi = 11 * target
    limit_lo = max(2, target - 10 * target)

    def admissible(n):
        return n not in excluded and is_prime(n)

    chosen: list[int] = []
    up, down = target, target - 1
    take_above = True
    while len(chosen) < count:
        found = None
        if take_above or down < limit_lo:
            while up <= limit_hi:
                if admissible(up):
                    found = up
                    up += 1
                    break
                up += 1
        if found is None and down >= limit_lo:
            while down >= limit_lo:
                if admissible(down):
                    found = down
                    down -= 1
                    break
                down -= 1
        if found is None:
            raise SearchExhaustedError(
                f"fewer than {count} usable primes within radius 10*{target}"
            )
        chosen.append(found)
        take_above = not take_above

    def product(values):
        out = 1
        for v in values:
            out *= v
        return out

    while product(chosen) < min_product:
        # Grow deterministically: swap the smallest pick for the next prime
        # above everything chosen so far.
        cursor = max(max(chosen), up - 1) + 1
        while cursor <= limit_hi and not admissible(cursor):
            cursor += 1
        if cursor > limit_hi:
            raise SearchExhaustedError(
                f"no prime set near {target} reaches product {min_product} "
                f"within radius 10*{target}"
            )
        chosen.remove(min(chosen))
        chosen.append(cursor)
        up = cursor + 1
    return sorted(chosen)


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (intended for n up to ~1e12)."""
    if n < 1:
        raise ValueError(f"cannot factorize {n}")
    factors: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    d = 5
    while d * d <= n:
        for p in (d, d + 2):
            while n % p == 0:
                factors[p] = factors.get(p, 0) + 1
                n //= p
        d += 6
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def coprime_divisor_capacity(n: int) -> int:
    """Number of distinct prime factors of n.

    This is the maximum count of pairwise coprime nontrivial moduli that a
    grid of length n can be decimated into exactly, which is what decides
    whether a recursive sub-problem is viable.
    """
    if n < 2:
        raise ValueError(f"capacity undefined for {n}")
    return len(factorize(n))
