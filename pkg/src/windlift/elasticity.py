"""St. Venant-Kirchhoff membrane energy for displaced 2D sheets in 3D.

The rest configuration is flat; a material point's deformation map is
x3d = (x, y, 0) + u(x, y), so the 3x2 deformation gradient is
F = I_32 + du/dx with I_32 the flat embedding. Energy density integrates
through the thickness as a simple scale factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# flat embedding of the 2D rest sheet into 3D
I32 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
I2 = np.eye(2)


@dataclass(frozen=True)
class Material:
    """Lame parameters (mu, lam), mass density, and sheet thickness."""
    mu: float = 1.0
    lam: float = 1.0
    density: float = 1.0
    thickness: float = 1.0

    def __post_init__(self):
        if self.mu <= 0 or self.density <= 0 or self.thickness <= 0:
            raise ValueError("mu, density, and thickness must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


def deformation_gradient(dphi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """F = I_32 + sum_i z_i * dphi_i, shape (n, 3, 2).

    ``dphi`` is the restricted basis jacobian (n, k, 3, 2).
    """
    z = np.asarray(z, dtype=np.float64)
    return I32 + np.einsum("nkcd,k->ncd", dphi, z)


def green_strain(F: np.ndarray) -> np.ndarray:
    """E = (F^T F - I) / 2, shape (n, 2, 2)."""
    return 0.5 * (np.einsum("nic,nid->ncd", F, F) - I2)


def stvk_energy_density(F: np.ndarray, material: Material) -> np.ndarray:
    """Membrane energy per rest area, shape (n,)."""
    E = green_strain(F)
    tr = E[:, 0, 0] + E[:, 1, 1]
    frob2 = np.einsum("ncd,ncd->n", E, E)
    return material.thickness * (material.mu * frob2
                                 + 0.5 * material.lam * tr * tr)


def stvk_energy_gradient_F(F: np.ndarray, material: Material) -> np.ndarray:
    """First Piola stress dPsi/dF, shape (n, 3, 2)."""
    E = green_strain(F)
    tr = E[:, 0, 0] + E[:, 1, 1]
    S = 2.0 * material.mu * E + material.lam * tr[:, None, None] * I2
    return material.thickness * np.einsum("nic,ncd->nid", F, S)
