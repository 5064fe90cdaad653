import logging
from typing import List, Tuple
import numpy as np
from src.schemas.schemas import DecoyEstimates, DecoyParams, KeyRateResult, ObservedCounts

logger = logging.getLogger(__name__)

# Eficiencia de reconciliación por defecto
DEFAULT_EC_EFFICIENCY = 1.16


class KeyRateService:
    @staticmethod
    def binary_entropy(x: float) -> float:
        if not 0 <= x <= 1:
            raise ValueError(f"La entropía binaria requiere 0 <= x <= 1 (x={x})")
        if x in (0, 1):
            return 0.0
        return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))

    @staticmethod
    def beta(eps_sec: float) -> float:
        return float(np.log(22 / eps_sec))

    @staticmethod
    def chernoff_expected_bounds(x: float, beta: float) -> Tuple[float, float]:
        """(inferior, superior) del valor esperado a partir del observado x."""
        if x < 0 or beta <= 0:
            raise ValueError("Se requiere x >= 0 y beta > 0")
        upper = x + beta + np.sqrt(2 * beta * x + beta**2)
        lower = x - beta / 2 - np.sqrt(2 * beta * x + beta**2 / 4)
        return max(float(lower), 0.0), float(upper)

    @staticmethod
    def chernoff_observed_bounds(x_star: float, beta: float) -> Tuple[float, float]:
        """(inferior, superior) del valor observado a partir del esperado x*."""
        if x_star < 0 or beta <= 0:
            raise ValueError("Se requiere x* >= 0 y beta > 0")
        upper = x_star + beta / 2 + np.sqrt(2 * beta * x_star + beta**2 / 4)
        lower = x_star - np.sqrt(2 * beta * x_star)
        return max(float(lower), 0.0), float(upper)

    @staticmethod
    def gamma_upper(n: float, k: float, lam: float, eps: float) -> float:
        """Corrección por muestreo aleatorio de la tasa de error de fase."""
        if n <= 0 or k <= 0:
            raise ValueError("Se requiere n > 0 y k > 0")
        if not 0 < lam < 1:
            raise ValueError(f"lambda fuera de (0, 1): {lam}")
        if not 0 < eps < 1:
            raise ValueError(f"epsilon fuera de (0, 1): {eps}")

        a = max(n, k)
        total = n + k
        g = total / (n * k) * np.log(total / (2 * np.pi * n * k * lam * (1 - lam) * eps**2))
        numerator = (1 - 2 * lam) * a * g / total + np.sqrt(
            a**2 * g**2 / total**2 + 4 * lam * (1 - lam) * g
        )
        return float(numerator / (2 + 2 * a**2 * g / total**2))

    @staticmethod
    def decoy_estimates(counts: ObservedCounts, params: DecoyParams) -> DecoyEstimates:
        """
        Estimadores de vacío y fotón único: cotas de Chernoff sobre cada
        recuento, estimación en valores esperados y conversión a observados.
        """
        mu, nu, omega = params.mu, params.nu, params.omega
        if mu * nu - nu**2 == 0:
            raise ValueError("Intensidades degeneradas: mu*nu - nu^2 = 0")
        beta = KeyRateService.beta(params.eps_sec)

        def lower(x: int) -> float:
            return KeyRateService.chernoff_expected_bounds(x, beta)[0]

        def upper(x: int) -> float:
            return KeyRateService.chernoff_expected_bounds(x, beta)[1]

        def bracket(n_mu: int, n_nu: int, n_0: int) -> float:
            return (
                np.exp(nu) * lower(n_nu) / params.p_nu
                - (nu**2 / mu**2) * np.exp(mu) * upper(n_mu) / params.p_mu
                - ((mu**2 - nu**2) / mu**2) * upper(n_0) / params.p_0
            )

        s0_expected = (
            (np.exp(-mu) * params.p_mu + np.exp(-nu) * params.p_nu) * lower(counts.n_0_z) / params.p_0
        )
        s1_zz_expected = (
            (mu**2 * np.exp(-mu) * params.p_mu + mu * nu * np.exp(-nu) * params.p_nu)
            / (mu * nu - nu**2)
            * bracket(counts.n_mu_z, counts.n_nu_z, counts.n_0_z)
        )
        s1_xx_expected = (
            (mu * omega * np.exp(-omega) * params.p_omega)
            / (mu * nu - nu**2)
            * bracket(counts.n_mu_x, counts.n_nu_x, counts.n_0_x)
        )
        t0_expected = np.exp(-omega) * params.p_omega / (2 * params.p_0) * lower(counts.n_0_x)

        estimates = [
            max(float(v), 0.0)
            for v in (s0_expected, s1_zz_expected, s1_xx_expected, t0_expected)
        ]
        observed = [KeyRateService.chernoff_observed_bounds(v, beta)[0] for v in estimates]
        return DecoyEstimates(
            s0_zz_expected=estimates[0],
            s1_zz_expected=estimates[1],
            s1_xx_expected=estimates[2],
            t0_xx_expected=estimates[3],
            s0_zz_lower=observed[0],
            s1_zz_lower=observed[1],
            s1_xx_lower=observed[2],
            t1_xx_upper=max(counts.m_omega_x - observed[3], 0.0),
        )

    @staticmethod
    def secret_key_length(
        s0: float, s1: float, phi: float, lambda_ec: float, eps_cor: float, eps_sec: float
    ) -> float:
        return float(
            s0
            + s1 * (1 - KeyRateService.binary_entropy(phi))
            - lambda_ec
            - np.log2(2 / eps_cor)
            - 6 * np.log2(22 / eps_sec)
        )

    @staticmethod
    def key_length(estimates: DecoyEstimates, params: DecoyParams) -> KeyRateResult:
        """
        Longitud de clave final. El error de fase se acota en [0, 0.5]; sin
        fotones únicos en X la longitud es 0 con un diagnóstico.
        """
        diagnostics: List[str] = []
        s0, s1_zz, s1_xx = estimates.s0_zz_lower, estimates.s1_zz_lower, estimates.s1_xx_lower
        t1 = estimates.t1_xx_upper

        def result(phi: float, ell_real: float, ell: int) -> KeyRateResult:
            return KeyRateResult(
                s0_zz_lower=s0,
                s1_zz_lower=s1_zz,
                s1_xx_lower=s1_xx,
                t1_xx_upper=t1,
                phi1_zz_upper=phi,
                ell_real=ell_real,
                ell=ell,
                diagnostics=diagnostics,
            )

        if s1_xx <= 0:
            diagnostics.append("s1_xx_lower = 0: no se puede acotar el error de fase, l = 0")
            logger.warning(diagnostics[-1])
            return result(0.5, 0.0, 0)

        lam = t1 / s1_xx
        if 0 < lam < 1 and s1_zz > 0:
            phi = lam + KeyRateService.gamma_upper(s1_zz, s1_xx, lam, params.eps_sec / 22)
        else:
            diagnostics.append(f"lambda = {lam:.6g} fuera de (0, 1) o s1_zz nulo: phi = 0.5")
            logger.warning(diagnostics[-1])
            phi = 0.5
        phi = min(max(phi, 0.0), 0.5)

        ell_real = KeyRateService.secret_key_length(
            s0, s1_zz, phi, params.lambda_ec, params.eps_cor, params.eps_sec
        )
        return result(phi, ell_real, max(int(np.floor(ell_real)), 0))

    @staticmethod
    def error_correction_leakage(
        n_z: float, e_z: float, f_ec: float = DEFAULT_EC_EFFICIENCY
    ) -> float:
        """lambda_EC = f_ec * n_z * h(E_z)."""
        if n_z < 0 or f_ec < 1:
            raise ValueError("Se requiere n_z >= 0 y f_ec >= 1")
        return f_ec * n_z * KeyRateService.binary_entropy(e_z)

    @staticmethod
    def evaluate(params: DecoyParams, counts: ObservedCounts) -> KeyRateResult:
        estimates = KeyRateService.decoy_estimates(counts, params)
        return KeyRateService.key_length(estimates, params)
