"""
kplane.py

Integration paths and node sets in the transverse-wavevector plane.

All paths return the radial node q, the longitudinal wavenumber k_z at that node
and the measure q*dq/k_z already multiplied by the quadrature weight, so a Weyl
integral over the radial wavevector becomes a plain weighted sum.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

PANEL_ORDER = 16


@dataclass(frozen=True)
class RadialNodes:
    """Radial nodes q, matching k_z and weighted measure q dq / k_z."""
    q: np.ndarray
    kz: np.ndarray
    measure: np.ndarray

    def __len__(self):
        return len(self.q)


def composite_gauss_legendre(a, b, n_panels, order=PANEL_ORDER):
    """
    Composite Gauss-Legendre rule on [a, b].

    Args:
        a (float): Lower limit
        b (float): Upper limit
        n_panels (int): Number of equal panels
        order (int): Nodes per panel

    Returns:
        tuple: (nodes, weights) as numpy arrays
    """
    if n_panels < 1:
        raise ValueError(f"n_panels must be at least 1, got {n_panels}")
    x, w = roots_legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def branch_sqrt(z):
    """Square root on the branch with non-negative imaginary part."""
    s = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def kz_of(k, q):
    """Longitudinal wavenumber sqrt(k^2 - q^2) with Im k_z >= 0."""
    return branch_sqrt(k * k - q * q)


def deformed_path(k, u_max, n_segment_panels, n_ray_panels, order=PANEL_ORDER):
    """
    Path q = k sin(theta), theta in [0, pi/2], followed by q = k + u^2, u in [0, u_max].

    On the first leg k_z = k cos(theta) and on the second k_z = i u sqrt(2k + u^2),
    both exact, so the branch point q = k is absorbed by the parametrization.
    Valid for Im k >= 0 whenever the integrand is analytic between the real axis
    and the path.

    Args:
        k (complex): THz wavenumber [rad/um]
        u_max (float): End of the ray parameter
        n_segment_panels (int): Panels on the theta leg
        n_ray_panels (int): Panels on the ray leg
        order (int): Nodes per panel

    Returns:
        RadialNodes: Nodes of the full path
    """
    theta, w_theta = composite_gauss_legendre(0.0, 0.5 * np.pi, n_segment_panels, order)
    q1 = k * np.sin(theta)
    kz1 = k * np.cos(theta)
    m1 = k * np.sin(theta) * w_theta

    u, w_u = composite_gauss_legendre(0.0, u_max, n_ray_panels, order)
    root = np.sqrt(2.0 * k + u * u)
    q2 = k + u * u
    kz2 = 1j * u * root
    m2 = -2j * q2 / root * w_u

    return RadialNodes(np.concatenate([q1, q2]),
                       np.concatenate([kz1, kz2]),
                       np.concatenate([m1, m2]))


def real_axis_path(k, u_max, n_segment_panels, n_ray_panels, order=PANEL_ORDER):
    """
    Real radial axis split at Re k: q = Re(k) sin(theta), then q = Re(k) + u^2.

    Used when k is far enough from the real axis that 1/k_z stays smooth.
    """
    kr = max(float(np.real(k)), 0.0)
    theta, w_theta = composite_gauss_legendre(0.0, 0.5 * np.pi, n_segment_panels, order)
    q1 = kr * np.sin(theta)
    kz1 = kz_of(k, q1)
    m1 = q1 * kr * np.cos(theta) * w_theta / kz1

    u, w_u = composite_gauss_legendre(0.0, u_max, n_ray_panels, order)
    q2 = kr + u * u
    kz2 = kz_of(k, q2)
    m2 = q2 * 2.0 * u * w_u / kz2

    return RadialNodes(np.concatenate([q1, q2]).astype(complex),
                       np.concatenate([kz1, kz2]),
                       np.concatenate([m1, m2]))


def hankel_path(k, u_max, n_panels, order=PANEL_ORDER):
    """
    Branch-cut contour q = k + i u^2 for Sommerfeld-type integrals.

    Returns the nodes q, the cut variable w = u sqrt(u^2 - 2ik) (its sign is
    irrelevant for even integrands) and the weighted measure ds / w = 2 du / sqrt(u^2 - 2ik).
    """
    u, w_u = composite_gauss_legendre(0.0, u_max, n_panels, order)
    root = np.sqrt(u * u - 2j * k)
    q = k + 1j * u * u
    return q, u * root, 2.0 * w_u / root
