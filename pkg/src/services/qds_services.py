import logging
from fractions import Fraction
from functools import lru_cache
from typing import List
import numpy as np
from src.models.models import (
    Bits,
    CombinedKeys,
    IrreduciblePoly,
    Signature,
    ThreePartyKeys,
)

logger = logging.getLogger(__name__)

# Expansión de un byte intercalando ceros: el cuadrado en GF(2)[x]
_SPREAD = tuple(
    sum(((byte >> bit) & 1) << (2 * bit) for bit in range(8)) for byte in range(256)
)

# Pasos de la criba de factores pequeños antes del test completo
_SCREEN_DEGREE = 8


def _poly_mod(a: int, modulus: int) -> int:
    degree = modulus.bit_length() - 1
    while True:
        shift = a.bit_length() - 1 - degree
        if shift < 0:
            return a
        a ^= modulus << shift


def _poly_square_mod(a: int, modulus: int) -> int:
    result, shift = 0, 0
    while a:
        result |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return _poly_mod(result, modulus)


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _prime_factors(value: int) -> List[int]:
    factors, candidate = [], 2
    while candidate * candidate <= value:
        if value % candidate == 0:
            factors.append(candidate)
            while value % candidate == 0:
                value //= candidate
        candidate += 1
    if value > 1:
        factors.append(value)
    return factors


def _frobenius_power(modulus: int, times: int) -> int:
    """x^(2^times) mod modulus."""
    power = _poly_mod(0b10, modulus)
    for _ in range(times):
        power = _poly_square_mod(power, modulus)
    return power


@lru_cache(maxsize=65536)
def _rabin_irreducible(poly: int) -> bool:
    degree = poly.bit_length() - 1
    if degree < 1:
        return False
    if degree == 1:
        return True
    x = _poly_mod(0b10, poly)
    for factor in _prime_factors(degree):
        reduced = _frobenius_power(poly, degree // factor)
        if _poly_gcd(poly, reduced ^ x) != 1:
            return False
    return _frobenius_power(poly, degree) == x


def _has_small_factor(poly: int, max_degree: int) -> bool:
    # Busca factores de grado <= max_degree vía gcd(x^(2^k) - x, f)
    x = _poly_mod(0b10, poly)
    power = x
    for _ in range(max_degree):
        power = _poly_square_mod(power, poly)
        if _poly_gcd(poly, power ^ x) != 1:
            return True
    return False


def _random_bits(length: int, rng: np.random.Generator) -> Bits:
    raw = int.from_bytes(rng.bytes((length + 7) // 8), "big")
    return Bits(raw & ((1 << length) - 1), length)


def _reverse(value: int, length: int) -> int:
    return int(format(value, f"0{length}b")[::-1], 2)


class QDSService:
    @staticmethod
    def is_irreducible(degree: int, coefficients: Bits) -> bool:
        """
        Test de Rabin sobre el polinomio x^degree + coeficientes.
        """
        if coefficients.length != degree or degree < 1:
            return False
        return _rabin_irreducible((1 << degree) | coefficients.value)

    @staticmethod
    def generate_irreducible(p: int, rng: np.random.Generator) -> IrreduciblePoly:
        """
        Muestrea uniformemente un polinomio irreducible de grado p.
        Los candidatos con término constante nulo o con peso par nunca son
        irreducibles (p >= 2) y se descartan sin coste.
        """
        if p < 2:
            raise ValueError("El grado del polinomio debe ser al menos 2")

        screen = min(_SCREEN_DEGREE, p // 2)
        attempts = 0
        while True:
            attempts += 1
            coefficients = _random_bits(p, rng).value | 1
            poly = (1 << p) | coefficients
            if poly.bit_count() % 2 == 0:
                continue
            if screen > 1 and _has_small_factor(poly, screen):
                continue
            if _rabin_irreducible(poly):
                logger.debug("Irreducible de grado %d tras %d candidatos", p, attempts)
                return IrreduciblePoly(p, Bits(coefficients, p))

    @staticmethod
    def lfsr_toeplitz_digest(
        message: Bits, init_state: Bits, poly: IrreduciblePoly
    ) -> Bits:
        """
        Calcula H_pq · m en GF(2) sin construir la matriz: la columna j es el
        estado del LFSR tras j pasos desde `init_state`.

        Raises:
            ValueError: Mensaje vacío o estado de longitud distinta al grado
        """
        if message.length == 0:
            raise ValueError("No se puede resumir un mensaje vacío")
        p = poly.degree
        if init_state.length != p:
            raise ValueError(
                f"El estado inicial mide {init_state.length} bits, se esperaban {p}"
            )

        # Internamente el bit i del entero es s[i]
        state = _reverse(init_state.value, p)
        feedback = poly.feedback_mask
        top = p - 1
        accumulator = 0
        for bit in str(message):
            if bit == "1":
                accumulator ^= state
            parity = (state & feedback).bit_count() & 1
            state = (state >> 1) | (parity << top)
        return Bits(_reverse(accumulator, p), p)

    @staticmethod
    def establish_key_bundle(p: int, rng: np.random.Generator) -> ThreePartyKeys:
        """
        Simula la distribución de claves: Alice comparte (X_b, Y_b) con Bob y
        (X_c, Y_c) con Charlie, y obtiene X_a, Y_a por XOR.
        """
        if p < 2:
            raise ValueError("El parámetro de seguridad debe ser al menos 2")
        x_b = _random_bits(p, rng)
        y_b = _random_bits(2 * p, rng)
        x_c = _random_bits(p, rng)
        y_c = _random_bits(2 * p, rng)
        return ThreePartyKeys.from_partner_keys(x_b, y_b, x_c, y_c)

    @staticmethod
    def sign(message: bytes, keys: ThreePartyKeys, rng: np.random.Generator) -> Signature:
        """
        Firma de un solo uso: Sig = (Dig1 || I_a) XOR Y_a.

        Raises:
            OneTimeKeyError: Si el paquete ya se usó
            ValueError: Si el mensaje está vacío
        """
        if not message:
            raise ValueError("No se puede firmar un mensaje vacío")
        keys.mark_consumed()

        poly = QDSService.generate_irreducible(keys.p, rng)
        digest = QDSService.lfsr_toeplitz_digest(Bits.from_bytes(message), keys.x_a, poly)
        return Signature(digest.concat(poly.coefficients) ^ keys.y_a)

    @staticmethod
    def combine_partner_keys(x_b: Bits, y_b: Bits, x_c: Bits, y_c: Bits) -> CombinedKeys:
        if x_b.length != x_c.length:
            raise ValueError("Las claves X de Bob y Charlie no coinciden en longitud")
        if y_b.length != y_c.length:
            raise ValueError("Las claves Y de Bob y Charlie no coinciden en longitud")
        if y_b.length != 2 * x_b.length:
            raise ValueError("Las claves Y deben medir el doble que las claves X")
        return CombinedKeys(k_x=x_b ^ x_c, k_y=y_b ^ y_c)

    @staticmethod
    def verify(message: bytes, sig: Signature, combined: CombinedKeys) -> bool:
        """
        Verificación de Bob o Charlie. Las entradas mal formadas devuelven False.
        """
        p = combined.k_x.length
        if p < 1 or not message:
            return False
        if sig.bits.length != 2 * p or combined.k_y.length != 2 * p:
            return False

        expected, poly_bits = (sig.bits ^ combined.k_y).split(p)
        if not QDSService.is_irreducible(p, poly_bits):
            return False
        actual = QDSService.lfsr_toeplitz_digest(
            Bits.from_bytes(message), combined.k_x, IrreduciblePoly(p, poly_bits)
        )
        return actual == expected

    @staticmethod
    def forgery_bound(p: int, q: int) -> Fraction:
        if p < 2 or q < 1:
            raise ValueError("Se requiere p >= 2 y q >= 1")
        return Fraction(q, 2 ** (p - 1))
