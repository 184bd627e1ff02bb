"""Channel synthesis: array geometry, steering vectors, and the three links.

The transmitter-to-surface link G uses a far-field multipath (Saleh-Valenzuela)
model; the surface-to-receiver links H (intended) and F (warden) use the exact
spherical-wave line-of-sight model, element pair by element pair. The surface
is a UPA on the yz-plane centered at the origin; receivers are ULAs on the
xy-plane.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, SystemConfig, PolarPosition


class ChannelParameterError(ValueError):
    """A channel-builder argument is out of its valid domain."""


class GeometryError(ValueError):
    """Physically impossible geometry (e.g. receiver on top of the surface)."""


class ArrayKind(enum.Enum):
    ULA = "ula"
    UPA = "upa"


@dataclass(frozen=True)
class ArrayGeometry:
    """Element layout of one antenna array.

    The UPA lies in the yz-plane; element (i_y, i_z) sits at
    (0, (i_y - (n_y-1)/2) d, (i_z - (n_z-1)/2) d) and the flat index is
    n = i_y * n_z + i_z, matching the Kronecker ordering of `upa_response`.
    A ULA runs along the y-axis through `center`.
    """

    kind: ArrayKind
    n_y: int
    n_z: int
    spacing_m: float
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.n_y < 1 or self.n_z < 1:
            raise ChannelParameterError(
                f"element counts must be >= 1, got n_y={self.n_y}, n_z={self.n_z}")
        if self.spacing_m <= 0:
            raise ChannelParameterError(f"spacing must be > 0, got {self.spacing_m}")
        if self.kind is ArrayKind.ULA and self.n_z != 1:
            raise ChannelParameterError("a ULA must have n_z == 1")

    @property
    def n_elements(self) -> int:
        return self.n_y * self.n_z

    def element_positions(self) -> np.ndarray:
        """(N, 3) Cartesian element positions in meters."""
        cx, cy, cz = self.center
        iy = np.arange(self.n_y) - (self.n_y - 1) / 2.0
        iz = np.arange(self.n_z) - (self.n_z - 1) / 2.0
        if self.kind is ArrayKind.UPA:
            yy, zz = np.meshgrid(iy, iz, indexing="ij")  # flat index i_y*n_z + i_z
            pos = np.stack([np.zeros(self.n_elements),
                            yy.ravel() * self.spacing_m,
                            zz.ravel() * self.spacing_m], axis=1)
        else:
            pos = np.stack([np.zeros(self.n_y),
                            iy * self.spacing_m,
                            np.zeros(self.n_y)], axis=1)
        return pos + np.array([cx, cy, cz])

    def aperture_m(self) -> float:
        """Physical aperture: planar diagonal with (count - 1) * spacing per axis."""
        dy = (self.n_y - 1) * self.spacing_m
        dz = (self.n_z - 1) * self.spacing_m
        return math.hypot(dy, dz)


@dataclass(frozen=True)
class ChannelSet:
    """The three links of one scenario plus the geometry that produced them."""

    G: np.ndarray   # surface x transmitter, (N, M_A)
    H: np.ndarray   # intended receiver x surface, (M_B, N)
    F: np.ndarray   # warden x surface, (M_W, N)
    ris: ArrayGeometry
    bob: PolarPosition
    willie: PolarPosition
    carrier_hz: float

    def __post_init__(self):
        n = self.ris.n_elements
        if self.G.shape[0] != n or self.H.shape[1] != n or self.F.shape[1] != n:
            raise ChannelParameterError(
                f"channel dimensions inconsistent with the surface size {n}: "
                f"G {self.G.shape}, H {self.H.shape}, F {self.F.shape}")
        for name, mat in (("G", self.G), ("H", self.H), ("F", self.F)):
            if not np.all(np.isfinite(mat)):
                raise ChannelParameterError(f"channel {name} has non-finite entries")


# ---------------------------------------------------------------------------
# steering vectors and scalar helpers
# ---------------------------------------------------------------------------

def ula_response(theta: float, m: int, d: float, lam: float) -> np.ndarray:
    """Normalized ULA array response.

    Entry k (0-based) is exp(j 2 pi d/lam * k * sin(theta)) / sqrt(m), so the
    vector always has unit Euclidean norm.
    """
    if m < 1:
        raise ChannelParameterError(f"element count must be >= 1, got {m}")
    if d <= 0 or lam <= 0:
        raise ChannelParameterError(f"need d > 0 and lam > 0, got d={d}, lam={lam}")
    k = np.arange(m)
    phase = 2.0 * np.pi * d / lam * k * np.sin(theta)
    return np.exp(1j * phase) / np.sqrt(m)


def upa_response(theta: float, phi: float, n_y: int, n_z: int,
                 d: float, lam: float) -> np.ndarray:
    """Normalized UPA response: Kronecker product of the horizontal factor
    (phase 2 pi d/lam * k * sin(theta) cos(phi)) and the vertical factor
    (phase 2 pi d/lam * k * sin(phi)), length n_y * n_z, unit norm.
    """
    if n_y < 1 or n_z < 1:
        raise ChannelParameterError(
            f"element counts must be >= 1, got n_y={n_y}, n_z={n_z}")
    if d <= 0 or lam <= 0:
        raise ChannelParameterError(f"need d > 0 and lam > 0, got d={d}, lam={lam}")
    ky = np.arange(n_y)
    kz = np.arange(n_z)
    horizontal = np.exp(1j * 2.0 * np.pi * d / lam * ky * np.sin(theta) * np.cos(phi))
    vertical = np.exp(1j * 2.0 * np.pi * d / lam * kz * np.sin(phi))
    return np.kron(horizontal, vertical) / np.sqrt(n_y * n_z)


def rayleigh_distance(aperture_m: float, rx_aperture_m: float, f: float) -> float:
    """Near/far field boundary 2 f (D + D_B)^2 / c for combined apertures."""
    if aperture_m < 0 or rx_aperture_m < 0:
        raise ChannelParameterError("apertures must be >= 0")
    if f <= 0:
        raise ChannelParameterError(f"carrier frequency must be > 0, got {f}")
    return 2.0 * f * (aperture_m + rx_aperture_m) ** 2 / SPEED_OF_LIGHT


def path_loss_alice_ris(distance_m: float) -> float:
    """Linear power gain of the transmitter-to-surface link.

    Urban mmWave LoS model: 69.4 + 24.0 log10(d) dB of loss at d meters.
    """
    if distance_m <= 0:
        raise ChannelParameterError(f"distance must be > 0, got {distance_m}")
    loss_db = 69.4 + 24.0 * math.log10(distance_m)
    return 10.0 ** (-loss_db / 10.0)


def free_space_gain(f: float, r: float) -> float:
    """Free-space amplitude gain c / (4 pi f r) between two points r apart."""
    if f <= 0 or r <= 0:
        raise ChannelParameterError(f"need f > 0 and r > 0, got f={f}, r={r}")
    return SPEED_OF_LIGHT / (4.0 * np.pi * f * r)


# ---------------------------------------------------------------------------
# far-field transmitter-to-surface link
# ---------------------------------------------------------------------------

def sv_path_angles(n_clusters: int, n_rays: int, rng: np.random.Generator):
    """Draw (azimuth AoA, elevation AoA, AoD) for every multipath component.

    Cluster centers are uniform on (-pi/2, pi/2); rays jitter around their
    cluster with a 5 degree standard deviation.
    """
    jitter_std = math.radians(5.0)
    out = []
    for _ in range(3):
        centers = rng.uniform(-np.pi / 2, np.pi / 2, size=n_clusters)
        rays = centers[:, None] + rng.normal(0.0, jitter_std, size=(n_clusters, n_rays))
        out.append(rays.ravel())
    return tuple(out)


def build_far_field_channel(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Multipath far-field link from the transmitter to the surface, (N, M_A).

    Sum over L_p paths of alpha_i * a_upa(aoa_i) a_ula(aod_i)^H with
    alpha_i ~ CN(0, 1), scaled by sqrt(M_A N chi / L_p) where chi is the
    average path-loss gain at the transmitter distance. Deterministic per rng
    state; E||G||_F^2 = M_A N chi.
    """
    l_p = cfg.n_paths
    if l_p < 1:
        raise ChannelParameterError(f"need at least one path, got {l_p}")
    lam = cfg.wavelength_m
    chi = path_loss_alice_ris(cfg.alice.range_m)
    az_aoa, el_aoa, aod = sv_path_angles(cfg.n_clusters, cfg.n_rays, rng)
    alpha = (rng.standard_normal(l_p) + 1j * rng.standard_normal(l_p)) / np.sqrt(2.0)

    n = cfg.n_elements
    g = np.zeros((n, cfg.m_a), dtype=complex)
    for i in range(l_p):
        a_rx = upa_response(az_aoa[i], el_aoa[i], cfg.n_y, cfg.n_z, cfg.d_x, lam)
        a_tx = ula_response(aod[i], cfg.m_a, cfg.d_a, lam)
        g += alpha[i] * np.outer(a_rx, a_tx.conj())
    return np.sqrt(cfg.m_a * n * chi / l_p) * g


# ---------------------------------------------------------------------------
# near-field surface-to-receiver links
# ---------------------------------------------------------------------------

def _receiver_positions(center: PolarPosition, m_rx: int, d: float) -> np.ndarray:
    """ULA receiver elements on the xy-plane at (x, y + m~ d, 0), m~ centered."""
    x, y = center.to_xy()
    offsets = (np.arange(m_rx) - (m_rx - 1) / 2.0) * d
    pos = np.zeros((m_rx, 3))
    pos[:, 0] = x
    pos[:, 1] = y + offsets
    return pos


def near_field_rows(ris: ArrayGeometry, points: np.ndarray, f: float) -> np.ndarray:
    """Spherical-wave rows for single-antenna probes at the given (P, 3) points.

    Row p entry n is chi_{p,n} exp(-j 2 pi f/c (r_{p,n} - r_p)) with r_{p,n}
    the exact element-pair distance, r_p the probe's distance from the surface
    center, and chi the free-space amplitude gain at r_{p,n}. Each entry is
    the physical per-element field, so a coherently aligned surface collects
    the full N-fold aperture gain.
    """
    elem = ris.element_positions()                        # (N, 3)
    diff = points[:, None, :] - elem[None, :, :]          # (P, N, 3)
    r_pn = np.linalg.norm(diff, axis=2)                   # (P, N)
    if np.min(r_pn) <= 0.0:
        raise GeometryError("a probe point coincides with a surface element")
    r_ref = np.linalg.norm(points - np.array(ris.center), axis=1)  # (P,)
    chi = SPEED_OF_LIGHT / (4.0 * np.pi * f * r_pn)
    phase = -2.0 * np.pi * f / SPEED_OF_LIGHT * (r_pn - r_ref[:, None])
    return chi * np.exp(1j * phase)


def build_near_field_los_channel(ris: ArrayGeometry, rx_center: PolarPosition,
                                 m_rx: int, f: float,
                                 rx_spacing_m: float | None = None) -> np.ndarray:
    """LoS spherical-wave link from the surface to an M_rx-element receiver.

    Returns the (M_rx, N) matrix whose rows follow `near_field_rows` for the
    receiver's element positions.
    """
    if m_rx < 1:
        raise ChannelParameterError(f"receiver must have >= 1 elements, got {m_rx}")
    if f <= 0:
        raise ChannelParameterError(f"carrier frequency must be > 0, got {f}")
    d = ris.spacing_m if rx_spacing_m is None else rx_spacing_m
    points = _receiver_positions(rx_center, m_rx, d)
    return near_field_rows(ris, points, f)


# ---------------------------------------------------------------------------
# scenario assembly
# ---------------------------------------------------------------------------

def ris_geometry(cfg: SystemConfig) -> ArrayGeometry:
    return ArrayGeometry(ArrayKind.UPA, cfg.n_y, cfg.n_z, cfg.d_x)


def build_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw one full channel realization (G, H, F) for the scenario.

    Only G is random; H and F are deterministic LoS geometry. The warden link
    F uses the identical spherical-wave construction as H.
    """
    ris = ris_geometry(cfg)
    g = build_far_field_channel(cfg, rng)
    h = build_near_field_los_channel(ris, cfg.bob, cfg.m_b, cfg.carrier_hz)
    f_mat = build_near_field_los_channel(ris, cfg.willie, cfg.m_w, cfg.carrier_hz)
    return ChannelSet(G=g, H=h, F=f_mat, ris=ris, bob=cfg.bob, willie=cfg.willie,
                      carrier_hz=cfg.carrier_hz)


def scenario_rayleigh_distance(cfg: SystemConfig, include_rx: bool = False) -> float:
    """Rayleigh distance of the configured surface.

    With ``include_rx`` the intended receiver's ULA aperture is added to the
    surface aperture before squaring, per the combined-aperture formula.
    """
    ris = ris_geometry(cfg)
    d_b = (cfg.m_b - 1) * cfg.d_x if include_rx else 0.0
    return rayleigh_distance(ris.aperture_m(), d_b, cfg.carrier_hz)
