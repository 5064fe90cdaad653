from fractions import Fraction
import numpy as np
import pytest
from src.models.models import Bits, IrreduciblePoly, Signature, ThreePartyKeys
from src.services.qds_services import QDSService
from src.utils.exceptions import OneTimeKeyError

# Número de polinomios irreducibles de grado p sobre GF(2)
IRREDUCIBLE_COUNTS = {2: 1, 3: 2, 4: 3, 5: 6, 6: 9, 7: 18, 8: 30}


def _mod(a: int, m: int) -> int:
    while a and a.bit_length() >= m.bit_length():
        a ^= m << (a.bit_length() - m.bit_length())
    return a


def trial_division_irreducible(poly: int) -> bool:
    degree = poly.bit_length() - 1
    for divisor in range(2, 1 << (degree // 2 + 1)):
        if 1 <= divisor.bit_length() - 1 <= degree // 2 and _mod(poly, divisor) == 0:
            return False
    return True


def dense_digest(message: str, init: str, coefficients: str) -> str:
    """Matriz de Toeplitz completa: la columna j es el estado tras j pasos."""
    p = len(init)
    taps = [int(coefficients[p - 1 - i]) for i in range(p)]
    state = [int(bit) for bit in init]
    columns = []
    for _ in message:
        columns.append(list(state))
        feedback = sum(c * s for c, s in zip(taps, state)) % 2
        state = state[1:] + [feedback]
    matrix = np.array(columns, dtype=np.int64).T
    vector = np.array([int(bit) for bit in message], dtype=np.int64)
    return "".join(str(int(bit)) for bit in matrix.dot(vector) % 2)


class TestBits:
    def test_string_round_trip_keeps_leading_zeros(self):
        bits = Bits.from_str("0010")
        assert bits.value == 2
        assert str(bits) == "0010"
        assert len(bits) == 4

    def test_from_bytes_is_msb_first(self):
        assert str(Bits.from_bytes(b"\x80\x01")) == "1000000000000001"

    def test_xor_requires_equal_lengths(self):
        with pytest.raises(ValueError):
            Bits.from_str("01") ^ Bits.from_str("011")

    def test_concat_and_split(self):
        joined = Bits.from_str("101").concat(Bits.from_str("0011"))
        assert str(joined) == "1010011"
        head, tail = joined.split(3)
        assert (str(head), str(tail)) == ("101", "0011")

    def test_value_must_fit(self):
        with pytest.raises(ValueError):
            Bits(8, 3)

    def test_invalid_bit_string(self):
        with pytest.raises(ValueError):
            Bits.from_str("01a")

    def test_hex_is_lowercase(self):
        assert Bits.from_str("11111010").to_hex() == "fa"


class TestIrreducibility:
    @pytest.mark.parametrize("degree", sorted(IRREDUCIBLE_COUNTS))
    def test_matches_trial_division(self, degree):
        found = 0
        for coefficients in range(1 << degree):
            poly = (1 << degree) | coefficients
            expected = trial_division_irreducible(poly)
            assert QDSService.is_irreducible(degree, Bits(coefficients, degree)) == expected
            found += expected
        assert found == IRREDUCIBLE_COUNTS[degree]

    def test_known_polynomials(self):
        assert QDSService.is_irreducible(3, Bits.from_str("011"))  # x^3 + x + 1
        assert not QDSService.is_irreducible(2, Bits.from_str("01"))  # x^2 + 1
        assert not QDSService.is_irreducible(3, Bits.from_str("01"))

    @pytest.mark.parametrize("p", [2, 5, 8, 16, 32, 64, 128])
    def test_generated_polynomial_is_irreducible(self, p):
        poly = QDSService.generate_irreducible(p, np.random.default_rng(p))
        assert poly.degree == p
        assert QDSService.is_irreducible(p, poly.coefficients)

    def test_generation_is_deterministic(self):
        first = QDSService.generate_irreducible(32, np.random.default_rng(7))
        second = QDSService.generate_irreducible(32, np.random.default_rng(7))
        assert first == second

    def test_generation_reaches_every_irreducible(self):
        rng = np.random.default_rng(0)
        seen = {QDSService.generate_irreducible(5, rng).as_int() for _ in range(400)}
        assert len(seen) == IRREDUCIBLE_COUNTS[5]

    def test_rejects_small_degree(self):
        with pytest.raises(ValueError):
            QDSService.generate_irreducible(1, np.random.default_rng(0))

    def test_polynomial_text(self):
        assert str(IrreduciblePoly.from_int(0b1011)) == "x^3 + x + 1"


class TestDigest:
    def test_hand_worked_example(self):
        digest = QDSService.lfsr_toeplitz_digest(
            Bits.from_str("1011"),
            Bits.from_str("100"),
            IrreduciblePoly(3, Bits.from_str("011")),
        )
        assert str(digest) == "011"

    def test_matches_dense_matrix(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            p = int(rng.integers(2, 9))
            q = int(rng.integers(1, 33))
            poly = QDSService.generate_irreducible(p, rng)
            init = "".join(str(bit) for bit in rng.integers(0, 2, size=p))
            message = "".join(str(bit) for bit in rng.integers(0, 2, size=q))
            digest = QDSService.lfsr_toeplitz_digest(
                Bits.from_str(message), Bits.from_str(init), poly
            )
            assert str(digest) == dense_digest(message, init, str(poly.coefficients))

    def test_zero_state_gives_zero_digest(self):
        poly = IrreduciblePoly(3, Bits.from_str("011"))
        digest = QDSService.lfsr_toeplitz_digest(Bits.from_str("1111"), Bits.zeros(3), poly)
        assert str(digest) == "000"

    def test_empty_message_rejected(self):
        poly = IrreduciblePoly(3, Bits.from_str("011"))
        with pytest.raises(ValueError):
            QDSService.lfsr_toeplitz_digest(Bits.zeros(0), Bits.from_str("100"), poly)

    def test_state_length_must_match_degree(self):
        poly = IrreduciblePoly(3, Bits.from_str("011"))
        with pytest.raises(ValueError):
            QDSService.lfsr_toeplitz_digest(Bits.from_str("1"), Bits.from_str("10"), poly)


class TestKeysAndSignatures:
    def test_bundle_correlations(self):
        keys = QDSService.establish_key_bundle(16, np.random.default_rng(1))
        assert keys.x_a == keys.x_b ^ keys.x_c
        assert keys.y_a == keys.y_b ^ keys.y_c
        assert (len(keys.x_a), len(keys.y_a)) == (16, 32)
        assert not keys.consumed

    def test_combined_keys_equal_signer_keys(self):
        keys = QDSService.establish_key_bundle(16, np.random.default_rng(2))
        combined = QDSService.combine_partner_keys(keys.x_b, keys.y_b, keys.x_c, keys.y_c)
        assert (combined.k_x, combined.k_y) == (keys.x_a, keys.y_a)

    def test_combining_rejects_mismatched_halves(self):
        keys = QDSService.establish_key_bundle(16, np.random.default_rng(3))
        with pytest.raises(ValueError):
            QDSService.combine_partner_keys(keys.x_b, keys.y_b, Bits.zeros(8), keys.y_c)

    def test_partner_keys_validate_lengths(self):
        with pytest.raises(ValueError):
            ThreePartyKeys.from_partner_keys(
                Bits.zeros(4), Bits.zeros(4), Bits.zeros(4), Bits.zeros(4)
            )

    def test_bundle_signs_only_once(self):
        rng = np.random.default_rng(4)
        keys = QDSService.establish_key_bundle(16, rng)
        signature = QDSService.sign(b"m1", keys, rng)
        assert signature.p == 16 and len(signature.bits) == 32
        assert keys.consumed
        with pytest.raises(OneTimeKeyError):
            QDSService.sign(b"m1", keys, rng)

    def test_empty_message_cannot_be_signed(self):
        rng = np.random.default_rng(5)
        keys = QDSService.establish_key_bundle(16, rng)
        with pytest.raises(ValueError):
            QDSService.sign(b"", keys, rng)
        assert not keys.consumed

    def test_malformed_inputs_do_not_verify(self):
        rng = np.random.default_rng(6)
        keys = QDSService.establish_key_bundle(16, rng)
        signature = QDSService.sign(b"ledger", keys, rng)
        combined = QDSService.combine_partner_keys(keys.x_b, keys.y_b, keys.x_c, keys.y_c)
        assert QDSService.verify(b"ledger", signature, combined)
        assert not QDSService.verify(b"", signature, combined)
        assert not QDSService.verify(b"ledger", Signature(Bits.zeros(30)), combined)

    def test_forgery_bound(self):
        assert QDSService.forgery_bound(16, 64) == Fraction(64, 2**15)
        with pytest.raises(ValueError):
            QDSService.forgery_bound(1, 8)

    @pytest.mark.slow
    def test_completeness(self):
        rng = np.random.default_rng(10)
        for _ in range(10_000):
            message = rng.bytes(int(rng.integers(1, 65)))
            keys = QDSService.establish_key_bundle(16, rng)
            signature = QDSService.sign(message, keys, rng)
            combined = QDSService.combine_partner_keys(keys.x_b, keys.y_b, keys.x_c, keys.y_c)
            assert QDSService.verify(message, signature, combined)

    @pytest.mark.slow
    def test_tampering_is_detected_within_bound(self):
        p, q_bytes = 16, 8
        rng = np.random.default_rng(20)
        accepted = trials = 0
        for _ in range(50_000):
            message = rng.bytes(q_bytes)
            keys = QDSService.establish_key_bundle(p, rng)
            signature = QDSService.sign(message, keys, rng)
            combined = QDSService.combine_partner_keys(keys.x_b, keys.y_b, keys.x_c, keys.y_c)

            tampered = message
            while tampered == message:
                tampered = rng.bytes(q_bytes)
            flipped = Signature(
                signature.bits ^ Bits(int(rng.integers(1, 2**32)), 2 * p)
            )
            for candidate in ((tampered, signature), (message, flipped)):
                trials += 1
                accepted += QDSService.verify(candidate[0], candidate[1], combined)

        bound = QDSService.forgery_bound(p, 8 * q_bytes)
        assert trials == 100_000
        assert accepted / trials <= 2 * float(bound)
