import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crtfft.errors import NotCoprimeError, SearchExhaustedError
from crtfft.numtheory import (
    ModTriple,
    coprime_divisor_capacity,
    egcd,
    factorize,
    find_coprime_moduli,
    garner2,
    garner3,
    garner3_parts,
    is_prime,
    mod_inverse,
)


class TestEgcd:
    def test_bezout_7_11(self):
        g, x, y = egcd(7, 11)
        assert g == 1 and 7 * x + 11 * y == 1
        # x must be the residue class 8 mod 11: exhaustive check of [0, 11)
        witnesses = [c for c in range(11) if (7 * c) % 11 == 1]
        assert witnesses == [8]
        assert x % 11 == 8

    def test_gcd_with_zero(self):
        g, x, y = egcd(0, 5)
        assert g == 5 and 0 * x + 5 * y == 5

    def test_large_coprime_primes(self):
        g, x, y = egcd(1009, 991)
        assert g == 1 and 1009 * x + 991 * y == 1

    def test_both_zero_rejected(self):
        with pytest.raises(ValueError):
            egcd(0, 0)

    @given(st.integers(-10**9, 10**9), st.integers(-10**9, 10**9))
    def test_bezout_identity(self, a, b):
        if a == 0 and b == 0:
            return
        g, x, y = egcd(a, b)
        assert g == math.gcd(a, b)
        assert a * x + b * y == g


class TestModInverse:
    def test_7_mod_11(self):
        assert mod_inverse(7, 11) == 8

    def test_identity(self):
        for m in (2, 7, 97):
            assert mod_inverse(1, m) == 1

    def test_4_mod_7(self):
        # exhaustive: 2 is the only inverse of 4 in [0, 7)
        assert [c for c in range(7) if (4 * c) % 7 == 1] == [2]
        assert mod_inverse(4, 7) == 2

    def test_not_coprime(self):
        with pytest.raises(NotCoprimeError):
            mod_inverse(6, 9)

    def test_exhaustive_up_to_1000(self):
        for m in range(2, 1001, 37):
            for a in range(1, m):
                if math.gcd(a, m) == 1:
                    assert (a * mod_inverse(a, m)) % m == 1


class TestIsPrime:
    def test_example_values(self):
        assert is_prime(1009)
        assert not is_prime(1003)  # 17 * 59
        assert is_prime(2)

    def test_against_trial_division_to_1e6(self):
        # sieve as the independent oracle
        n = 10**6
        sieve = bytearray([1]) * (n + 1)
        sieve[0] = sieve[1] = 0
        for p in range(2, int(n**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
        for v in range(0, n + 1, 997):
            assert is_prime(v) == bool(sieve[v])
        for v in list(range(2, 2000)) + [999983, 999979, 999961]:
            assert is_prime(v) == bool(sieve[v])

    def test_64bit_carmichael_style_composites(self):
        # strong-pseudoprime traps for small witness sets
        for n in (3215031751, 3474749660383, 341550071728321):
            assert not is_prime(n)


class TestGarner2:
    def test_published_rows(self):
        assert garner2(0, 7, 7, 11) == 7
        assert garner2(6, 8, 7, 11) == 41

    def test_corrected_row_by_exhaustion(self):
        expected = [f for f in range(77) if f % 7 == 3 and f % 11 == 1]
        assert expected == [45]
        assert garner2(3, 1, 7, 11) == 45

    def test_equal_residues(self):
        assert garner2(4, 4, 7, 11) == 4

    def test_not_coprime(self):
        with pytest.raises(NotCoprimeError):
            garner2(1, 2, 6, 9)

    @given(st.data())
    @settings(max_examples=200)
    def test_congruences_hold(self, data):
        m1 = data.draw(st.sampled_from([3, 5, 7, 11, 13, 16, 27]))
        m2 = data.draw(st.sampled_from([4, 9, 11, 13, 17, 25]))
        if math.gcd(m1, m2) != 1:
            return
        r1 = data.draw(st.integers(0, m1 - 1))
        r2 = data.draw(st.integers(0, m2 - 1))
        f = garner2(r1, r2, m1, m2)
        assert 0 <= f < m1 * m2
        assert f % m1 == r1 and f % m2 == r2


class TestGarner3:
    def test_published_value(self):
        t = ModTriple.create(7, 11, 13)
        assert garner3(6, 8, 2, t) == 41

    def test_trivial_values(self):
        t = ModTriple.create(7, 11, 13)
        assert garner3(0, 0, 0, t) == 0
        assert garner3(5, 5, 5, t) == 5

    def test_full_sweep_1001(self):
        t = ModTriple.create(7, 11, 13)
        for f in range(1001):
            assert garner3(f % 7, f % 11, f % 13, t) == f

    def test_random_small_triples_roundtrip(self):
        triples = [(3, 5, 7), (8, 9, 11), (16, 21, 25), (23, 29, 31), (32, 45, 49)]
        for m1, m2, m3 in triples:
            t = ModTriple.create(m1, m2, m3)
            assert t.M <= 10**5
            for f in range(t.M):
                assert garner3(f % m1, f % m2, f % m3, t) == f

    def test_parts_recompose(self):
        t = ModTriple.create(7, 11, 13)
        f, u2, u3 = garner3_parts(41 % 7, 41 % 11, 41 % 13, t)
        assert f == 41
        assert f == (41 % 7) + u2 * 7 + u3 * 77

    def test_agreement_with_garner2_below_product(self):
        t = ModTriple.create(7, 11, 13)
        for f in range(77):
            f12 = garner2(f % 7, f % 11, 7, 11)
            assert f12 == f
            assert garner3(f % 7, f % 11, f12 % 13, t) == f


class TestModTriple:
    def test_invariants(self):
        t = ModTriple.create(7, 11, 13)
        assert (t.m1 * t.gamma12) % t.m2 == 1
        assert (t.m1 * t.m2 * t.gamma23) % t.m3 == 1
        assert t.M == 1001

    def test_rejects_shared_factor(self):
        with pytest.raises(NotCoprimeError):
            ModTriple.create(6, 9, 11)

    def test_rejects_oversized_product(self):
        p = (1 << 43) - 1  # not prime, but coprimality is what matters here
        with pytest.raises((ValueError, NotCoprimeError)):
            ModTriple.create(p, p - 2, p - 4)


class TestFindCoprimeModuli:
    def test_toy_triple(self):
        assert find_coprime_moduli(8, 3, 64) == [7, 11, 13]

    def test_near_1000(self):
        moduli = find_coprime_moduli(1000, 3, 10**6)
        assert len(moduli) == 3
        product = math.prod(moduli)
        assert product >= 10**6
        for m in moduli:
            assert is_prime(m) and abs(m - 1000) < 100
        assert moduli == find_coprime_moduli(1000, 3, 10**6)  # deterministic

    def test_near_1024(self):
        assert find_coprime_moduli(1024, 3, 2**20) == [1021, 1031, 1033]

    def test_single(self):
        assert find_coprime_moduli(2, 1, 2) == [2]

    def test_min_product_forces_growth(self):
        moduli = find_coprime_moduli(10, 2, 10**4)
        assert math.prod(moduli) >= 10**4
        assert all(is_prime(m) for m in moduli)

    def test_exclusions_skipped(self):
        base = find_coprime_moduli(1000, 3, 10**6)
        more = find_coprime_moduli(1000, 3, 10**6, exclusions=tuple(base))
        assert not set(base) & set(more)

    def test_exhaustion(self):
        with pytest.raises(SearchExhaustedError):
            find_coprime_moduli(2, 3, 10**30)


class TestCapacity:
    def test_published_example(self):
        assert coprime_divisor_capacity(100000) == 2

    def test_prime(self):
        assert coprime_divisor_capacity(1009) == 1

    def test_three_prime_product(self):
        assert coprime_divisor_capacity(1001) == 3

    def test_factorize_consistency(self):
        for n in (2, 12, 360, 1001, 2**10 * 3**4):
            f = factorize(n)
            assert math.prod(p**e for p, e in f.items()) == n
            assert coprime_divisor_capacity(n) == len(f)
