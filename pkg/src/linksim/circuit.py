"""Compile circuit parameters to spin-model couplings.

Energies are ordinary frequencies in MHz throughout.  The chain of
derivations:

    transmon (E_J, E_C)        -> qubit splitting eps, anharmonicity U
    coupler (E_JQ, C_Q/C, phi) -> hopping mu and Ising Omega-like
    (mu, Omega, V')            -> effective ring exchange J = 4 mu^2/Omega
                                  and Ising V = V' - J

Flux tuning replaces the coupler junction energy by
E_JQ * cos(pi * phi_ext/Phi_0); the resonator-biased (RK) couplers pick
up the corresponding sine quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

TRANSMON_RATIO_MIN = 20.0
PERTURBATIVE_RATIO = 0.5


@dataclass(frozen=True)
class TransmonSpec:
    E_J: float           # Josephson energy (MHz)
    E_C: float           # charging energy (MHz)

    def __post_init__(self):
        if self.E_J <= 0 or self.E_C <= 0:
            raise ValueError("transmon energies must be positive")

    @property
    def in_transmon_regime(self):
        return self.E_J / self.E_C >= TRANSMON_RATIO_MIN


@dataclass(frozen=True)
class CouplerSpec:
    E_JQ: float          # coupling junction energy at zero flux (MHz)
    C_ratio: float       # C_Q / C
    flux: float = 0.0    # phi_ext / Phi_0
    kind: str = "plaquette"   # 'plaquette' or 'vertex'

    def __post_init__(self):
        if not (0.0 <= self.C_ratio < 1.0):
            raise ValueError("C_Q/C must lie in [0, 1)")
        if self.E_JQ < 0:
            raise ValueError("coupler junction energy must be >= 0")
        if self.kind not in ("plaquette", "vertex"):
            raise ValueError("coupler kind must be 'plaquette' or 'vertex'")

    @property
    def effective_E_JQ(self):
        return self.E_JQ * math.cos(math.pi * self.flux)


@dataclass
class ResonatorParams:
    omega: float         # resonator frequency (MHz)
    beta_prime: float    # diagonal resonator-spin coupling (MHz)
    eta: float           # hopping resonator-spin coupling (MHz)
    alpha: float = 1.0   # fraction of the resonator flux biasing the SQUID


@dataclass
class ModelParams:
    """Microscopic and derived effective couplings (MHz)."""

    epsilon: float = 0.0
    U: float = 0.0
    mu_sq: float = 0.0
    mu_plus: float = 0.0
    Omega: float = 0.0         # vertex Ising
    Omega_prime: float = 0.0   # plaquette Ising
    Vprime: float = 0.0        # Omega - Omega_prime
    J: float = 0.0
    V: float = 0.0
    W: float = 0.0
    resonator: ResonatorParams | None = None
    warnings: list = field(default_factory=list)

    @property
    def perturbative(self):
        return self.Omega == 0 or abs(self.mu_sq / self.Omega) <= PERTURBATIVE_RATIO

    def check_consistency(self, tol=1e-9):
        """J = 4 mu^2 / Omega and V = V' - J, re-derived on access."""
        if self.Omega:
            if abs(self.J - 4.0 * self.mu_sq ** 2 / self.Omega) > tol:
                return False
        return abs(self.V - (self.Vprime - self.J)) <= tol


def derive_transmon(spec: TransmonSpec):
    """(epsilon, U) from the quartic cosine expansion: U = E_C and
    eps = sqrt(8 E_C E_J) - U."""
    U = spec.E_C
    eps = math.sqrt(8.0 * spec.E_C * spec.E_J) - U
    notes = []
    if not spec.in_transmon_regime:
        notes.append(
            f"E_J/E_C = {spec.E_J / spec.E_C:.1f} < {TRANSMON_RATIO_MIN:.0f}:"
            " outside the transmon regime, quartic expansion unreliable")
    return eps, U, notes


def derive_coupling(epsilon, U, E_J, coupler: CouplerSpec):
    """(mu, Omega-like) for one coupler at its flux bias.

    Omega_like = 2 U E_eff / E_J,  mu = (eps/2)(E_eff/E_J - C_Q/C) - Omega_like,
    with E_eff = E_JQ cos(pi phi_ext/Phi_0).
    """
    if E_J <= 0:
        raise ValueError("qubit junction energy must be positive")
    e_eff = coupler.effective_E_JQ
    omega_like = 2.0 * U * e_eff / E_J
    mu = 0.5 * epsilon * (e_eff / E_J - coupler.C_ratio) - omega_like
    return mu, omega_like


def derive_effective(params: ModelParams) -> ModelParams:
    """Fill J and V from (mu_sq, Omega, Vprime); flags non-perturbative
    ratios but still returns the algebraic values."""
    if params.Omega <= 0:
        raise ValueError("effective couplings require Omega > 0")
    params.J = 4.0 * params.mu_sq ** 2 / params.Omega
    params.V = params.Vprime - params.J
    if not params.perturbative:
        msg = (f"mu/Omega = {params.mu_sq / params.Omega:.3f} exceeds "
               f"{PERTURBATIVE_RATIO}: second-order couplings unreliable")
        params.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    return params


@dataclass(frozen=True)
class CircuitSpec:
    """Full parameter set of the flux-tunable two-coupler circuit."""

    epsilon: float
    U: float
    E_J: float = 1.0                 # only ratios enter; 1.0 means ratios given directly
    vertex_EJ_ratio: float = 0.2     # E_J^+ / E_J
    vertex_C_ratio: float = 0.16     # C_+ / C
    plaquette_EJ_ratio: float = 0.2  # E_J^square / E_J
    plaquette_C_ratio: float = 0.16  # C_square / C

    @classmethod
    def from_transmon(cls, transmon: TransmonSpec, **ratios):
        eps, U, _ = derive_transmon(transmon)
        return cls(epsilon=eps, U=U, E_J=transmon.E_J, **ratios)


def compile_at_flux(spec: CircuitSpec, flux: float) -> ModelParams:
    """Spin-model couplings with the plaquette SQUIDs biased at
    phi_ext/Phi_0 = flux and the vertex couplers at zero flux."""
    vertex = CouplerSpec(E_JQ=spec.vertex_EJ_ratio * spec.E_J,
                         C_ratio=spec.vertex_C_ratio, flux=0.0, kind="vertex")
    plaq = CouplerSpec(E_JQ=spec.plaquette_EJ_ratio * spec.E_J,
                       C_ratio=spec.plaquette_C_ratio, flux=flux, kind="plaquette")
    mu_plus, Omega = derive_coupling(spec.epsilon, spec.U, spec.E_J, vertex)
    mu_sq, Omega_prime = derive_coupling(spec.epsilon, spec.U, spec.E_J, plaq)
    params = ModelParams(
        epsilon=spec.epsilon, U=spec.U,
        mu_sq=mu_sq, mu_plus=mu_plus,
        Omega=Omega, Omega_prime=Omega_prime,
        Vprime=Omega - Omega_prime,
    )
    return derive_effective(params)


def tuning_curve(spec: CircuitSpec, flux_grid):
    """Rows of (flux, mu/Omega, J/Omega, V/Omega, J/V) over the grid."""
    rows = []
    for flux in flux_grid:
        if not (0.0 <= flux <= 0.5):
            raise ValueError("flux grid must lie within [0, 0.5]")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = compile_at_flux(spec, flux)
        j_over_v = p.J / p.V if p.V != 0 else math.inf
        rows.append({
            "flux": flux,
            "mu_over_Omega": p.mu_sq / p.Omega,
            "J_over_Omega": p.J / p.Omega,
            "V_over_Omega": p.V / p.Omega,
            "J_over_V": j_over_v,
            "mu_sq": p.mu_sq,
            "J": p.J,
            "V": p.V,
            "perturbative": p.perturbative,
        })
    return rows


def find_v_zero_crossing(spec: CircuitSpec, lo=0.0, hi=0.5, tol=1e-12):
    """Bisect for the flux where the effective V changes sign, if any."""

    def v_at(flux):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return compile_at_flux(spec, flux).V

    v_lo, v_hi = v_at(lo), v_at(hi)
    if v_lo == 0.0:
        return lo
    if v_hi == 0.0:
        return hi
    if v_lo * v_hi > 0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v_mid = v_at(mid)
        if abs(v_mid) < tol or hi - lo < tol:
            return mid
        if v_lo * v_mid <= 0:
            hi = mid
        else:
            lo, v_lo = mid, v_mid
    return 0.5 * (lo + hi)


def derive_rk_couplings(epsilon, U, E_J, E_J_sq_ratio, flux, alpha,
                        omega, mu, Omega):
    """Resonator-mediated couplings of the RK circuit.

    beta' = 2 U (E_J^sq/E_J) sin(pi phi), eta = (eps/2)(E_J^sq/E_J) sin(pi phi) - beta',
    both reduced by the flux fraction alpha; effective couplings
    J = -4 mu^2/Omega - 4 eta^2/(Omega - omega) and V = -2 beta^2/omega
    with beta the alpha-scaled beta'.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    if abs(omega - Omega) < 1e-12:
        raise ValueError("omega = Omega: degenerate perturbation denominators")
    if omega <= 0:
        raise ValueError("resonator frequency must be positive")
    s = math.sin(math.pi * flux)
    beta_prime = 2.0 * U * E_J_sq_ratio * s * alpha
    eta = (0.5 * epsilon * E_J_sq_ratio * s - 2.0 * U * E_J_sq_ratio * s) * alpha
    res = ResonatorParams(omega=omega, beta_prime=beta_prime, eta=eta, alpha=alpha)
    J = -4.0 * mu ** 2 / Omega - 4.0 * eta ** 2 / (Omega - omega)
    V = -2.0 * beta_prime ** 2 / omega
    return res, J, V
