"""
Physics and cost coefficients of pipeline arcs
"""
import numpy as np

from utils.utils_run import DomainError


# Belgian network gas data, temperature in K, roughness in mm
ROUGHNESS = 0.05
COMPRESSIBILITY = 0.8
TEMPERATURE = 281.15
DENSITY = 0.6106
FLOW_CONSTANT = 96.074830e-15

# Linear expansion cost L * (a * D^2.5 + b)
COST_DIAMETER_COEF = 1.04081e-6
COST_LENGTH_COEF = 11.2155



def _check_positive(**kwargs):
    for name, val in kwargs.items():
        if not val > 0 or not np.isfinite(val):
            raise DomainError(f"{name} must be positive and finite, got {val}")



def weymouth_coefficient(Z: float, R: float, f: float, T: float, D: float) -> float:
    """
    Weymouth resistance w = Z * R * f * T / (2 * D)

    Parameters:
    -----------
        Z: float
            Gas compressibility factor
        R: float
            Gas constant
        f: float
            Friction factor of the pipe
        T: float
            Gas temperature
        D: float
            Pipe diameter

    Returns:
    -------
    float
        Resistance in units consistent with the inputs
    """
    _check_positive(Z=Z, R=R, f=f, T=T, D=D)
    return Z * R * f * T / (2.0 * D)



def expansion_cost(D: float, L: float) -> float:
    """
    Cost of building a new pipe of diameter D (mm) and length L (km)
    """
    _check_positive(D=D, L=L)
    return L * (COST_DIAMETER_COEF * D ** 2.5 + COST_LENGTH_COEF)



def friction_factor(D: float, roughness: float = ROUGHNESS) -> float:
    """ Nikuradse friction factor for fully turbulent flow """
    _check_positive(D=D, roughness=roughness)
    return (2.0 * np.log10(3.7 * D / roughness)) ** -2



def pipe_resistance(D: float, L: float, roughness: float = ROUGHNESS, z: float = COMPRESSIBILITY,
                    T: float = TEMPERATURE, density: float = DENSITY) -> float:
    """
    Resistance w of a pipe with diameter D (mm) and length L (km) in bar^2 day^2 / MMscf^2.

    The flow constant C satisfies sign(phi) phi^2 = C^2 (p_i^2 - p_j^2), so w = 1 / C^2.
    """
    _check_positive(D=D, L=L, z=z, T=T, density=density)
    lam = friction_factor(D, roughness)
    c_sq = FLOW_CONSTANT * D ** 5 / (lam * z * T * L * density)
    return 1.0 / c_sq
