"""Channel realizations for the AP -> user, AP -> IRS and IRS -> user links.

Powers are linear (watts or dimensionless gains); dB only appears in
``LinkParams`` and in the conversion helpers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class Geometry:
    """2-D positions in meters.  Defaults follow the AP at the origin, IRS at (51, 0)."""

    ap_position: tuple = (0.0, 0.0)
    irs_position: tuple = (51.0, 0.0)
    user_position: tuple = (25.0, 2.0)

    def __post_init__(self):
        pts = [np.asarray(p, dtype=float) for p in (self.ap_position, self.irs_position, self.user_position)]
        for a, b in ((0, 1), (0, 2), (1, 2)):
            if np.linalg.norm(pts[a] - pts[b]) <= 0:
                raise ValueError("AP, IRS and user positions must be pairwise distinct")

    @classmethod
    def for_user_distance(cls, d: float, irs_x: float = 51.0, user_y: float = 2.0) -> "Geometry":
        return cls((0.0, 0.0), (irs_x, 0.0), (float(d), user_y))

    @staticmethod
    def _dist(a, b) -> float:
        return float(np.hypot(a[0] - b[0], a[1] - b[1]))

    @property
    def ap_user(self) -> float:
        return self._dist(self.ap_position, self.user_position)

    @property
    def ap_irs(self) -> float:
        return self._dist(self.ap_position, self.irs_position)

    @property
    def irs_user(self) -> float:
        return self._dist(self.irs_position, self.user_position)


@dataclass(frozen=True)
class LinkParams:
    reference_loss_db: float = 30.0
    pathloss_exponent: float = 2.0
    penetration_loss_db: float = 0.0
    tx_gain_dbi: float = 0.0
    rx_gain_dbi: float = 0.0

    def __post_init__(self):
        if self.reference_loss_db < 0:
            raise ValueError("reference_loss_db must be >= 0")
        if self.pathloss_exponent < 1:
            raise ValueError("pathloss_exponent must be >= 1")
        if self.penetration_loss_db < 0:
            raise ValueError("penetration_loss_db must be >= 0")


def default_link_params(ap_user_exponent=3.5, ap_irs_exponent=2.2, irs_user_exponent=2.8,
                        penetration_db=10.0, element_gain_dbi=5.0) -> dict:
    """Per-link parameters of the reference scenario.

    Rayleigh links (AP-user, IRS-user) carry the penetration loss; the IRS
    element gain is counted once, on the IRS-user hop.
    """
    return {
        "ap_user": LinkParams(30.0, ap_user_exponent, penetration_db),
        "ap_irs": LinkParams(30.0, ap_irs_exponent, 0.0),
        "irs_user": LinkParams(30.0, irs_user_exponent, penetration_db, tx_gain_dbi=element_gain_dbi),
    }


@dataclass
class ChannelSet:
    """``h_d`` (M,), ``G`` (N, M) and ``h_r`` (N,).  The user sees ``h_r^H Theta G + h_d^H``."""

    h_d: np.ndarray
    G: np.ndarray
    h_r: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h_d = np.asarray(self.h_d, dtype=complex).reshape(-1)
        self.h_r = np.asarray(self.h_r, dtype=complex).reshape(-1)
        self.G = np.asarray(self.G, dtype=complex).reshape(self.h_r.size, self.h_d.size)
        if not (np.all(np.isfinite(self.h_d)) and np.all(np.isfinite(self.G)) and np.all(np.isfinite(self.h_r))):
            raise ValueError("channel entries must be finite")

    @property
    def M(self) -> int:
        return self.h_d.size

    @property
    def N(self) -> int:
        return self.h_r.size

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "h_d": complex_to_pairs(self.h_d),
            "G": complex_to_pairs(self.G),
            "h_r": complex_to_pairs(self.h_r),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSet":
        h_d = pairs_to_complex(data["h_d"]).reshape(int(data["M"]))
        h_r = pairs_to_complex(data["h_r"]).reshape(int(data["N"]))
        G = pairs_to_complex(data["G"]).reshape(h_r.size, h_d.size)
        return cls(h_d, G, h_r, dict(data.get("meta", {})))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "ChannelSet":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def complex_to_pairs(a):
    """Nested lists with every complex number written as ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    if arr.shape[-1] != 2:
        raise ValueError("complex numbers must be encoded as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def path_gain_linear(distance_m: float, params: LinkParams) -> float:
    """Linear power gain of a link at ``distance_m`` meters."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    net_db = params.reference_loss_db + params.penetration_loss_db - params.tx_gain_dbi - params.rx_gain_dbi
    return float(10.0 ** (-net_db / 10.0) * distance_m ** (-params.pathloss_exponent))


def rayleigh_matrix(rows: int, cols: int, power_gain: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, power_gain) entries."""
    if power_gain < 0:
        raise ValueError("power_gain must be non-negative")
    std = np.sqrt(power_gain / 2.0)
    return std * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


def steering_vector(n: int, direction_cosine: float) -> np.ndarray:
    """Half-wavelength uniform array response ``exp(j*pi*k*cos)``, k = 0..n-1."""
    return np.exp(1j * np.pi * np.arange(n) * direction_cosine)


def los_matrix(N: int, M: int, power_gain: float, geometry: Optional[Geometry] = None,
               rng: Optional[np.random.Generator] = None, mode: str = "geometric", n_y: int = 1) -> np.ndarray:
    """Rank-one line-of-sight AP -> IRS channel ``sqrt(gain) * a_r a_t^H``.

    In ``geometric`` mode the AP array lies along the y-axis and the IRS
    elements are laid out row-major as ``N // n_y`` columns along the x-axis by
    ``n_y`` rows along the (out-of-plane) z-axis, so the in-plane geometry fixes
    the phase progression along x only.  ``random`` mode draws i.i.d. uniform
    phases for both array responses instead.
    """
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    if mode == "geometric":
        geometry = Geometry() if geometry is None else geometry
        ap = np.asarray(geometry.ap_position, dtype=float)
        irs = np.asarray(geometry.irs_position, dtype=float)
        u = (irs - ap) / np.linalg.norm(irs - ap)
        a_t = steering_vector(M, u[1])
        if N % n_y:
            raise ValueError(f"N={N} is not a multiple of n_y={n_y}")
        # incoming direction seen from the IRS points back to the AP
        ix = np.repeat(np.arange(N // n_y), n_y)
        a_r = np.exp(1j * np.pi * ix * (-u[0]))
    elif mode == "random":
        if rng is None:
            raise ValueError("random LoS mode needs an rng")
        a_r = np.exp(2j * np.pi * rng.random(N))
        a_t = np.exp(2j * np.pi * rng.random(M))
    else:
        raise ValueError(f"unknown LoS mode {mode!r}")
    return np.sqrt(power_gain) * np.outer(a_r, a_t.conj())


def realize_channels(geometry: Geometry, M: int, N: int, links: Optional[dict] = None,
                     rng: Optional[np.random.Generator] = None, los_mode: str = "geometric",
                     n_y: int = 1) -> ChannelSet:
    """Draw one quasi-static channel realization for the given geometry.

    ``links`` maps ``ap_user``, ``ap_irs`` and ``irs_user`` to ``LinkParams``
    (see ``default_link_params``).
    """
    links = default_link_params() if links is None else links
    rng = np.random.default_rng() if rng is None else rng
    g_d = path_gain_linear(geometry.ap_user, links["ap_user"])
    g_g = path_gain_linear(geometry.ap_irs, links["ap_irs"])
    g_r = path_gain_linear(geometry.irs_user, links["irs_user"])
    h_d = rayleigh_matrix(M, 1, g_d, rng)[:, 0]
    h_r = rayleigh_matrix(N, 1, g_r, rng)[:, 0]
    G = los_matrix(N, M, g_g, geometry, rng, los_mode, n_y)
    meta = {"ap_user_gain": g_d, "ap_irs_gain": g_g, "irs_user_gain": g_r}
    return ChannelSet(h_d, G, h_r, meta)


def random_unit_channels(M: int, N: int, rng: np.random.Generator) -> ChannelSet:
    """Every link i.i.d. CN(0, 1); used for scale-free oracle instances."""
    return ChannelSet(rayleigh_matrix(M, 1, 1.0, rng)[:, 0],
                      rayleigh_matrix(N, M, 1.0, rng),
                      rayleigh_matrix(N, 1, 1.0, rng)[:, 0])
