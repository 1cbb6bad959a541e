"""Room geometry, VCSEL array, user placement and connectivity classes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class Connectivity(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class Room:
    width: float = 5.0
    depth: float = 5.0
    height: float = 3.0
    receiver_plane_height: float = 0.85

    def __post_init__(self):
        if min(self.width, self.depth, self.height) <= 0:
            raise ValueError("room dimensions must be positive")
        if not 0 <= self.receiver_plane_height < self.height:
            raise ValueError("receiver plane must lie below the ceiling")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.width / 2, self.depth / 2, self.receiver_plane_height])


@dataclass(frozen=True)
class Vcsel:
    """One laser access point mounted on the ceiling.

    ``rin`` is linear (1/Hz), not dB/Hz.
    """

    id: int
    position: tuple[float, float, float]
    optical_power: float
    beam_waist: float
    wavelength: float = 830e-9
    bandwidth: float = 5e9
    rin: float = 10 ** (-155 / 10)

    def __post_init__(self):
        for name in ("optical_power", "beam_waist", "wavelength", "bandwidth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rin < 0:
            raise ValueError("rin must be non-negative")


@dataclass(frozen=True)
class ReceiverConfig:
    """Angle-diversity detector made of ``num_photodiodes`` oriented faces.

    Each face sits ``face_offset`` metres from the detector centre along its
    own azimuth, so the faces sample the beam at slightly different points.
    ``total_area`` is split equally between faces unless
    ``area_is_per_photodiode`` is set. Without explicit orientations a
    single face points straight up and several faces form a ring tilted
    30 degrees off vertical.
    """

    num_photodiodes: int
    total_area: float = 15e-6
    fov_half_angle: float = 45.0
    responsivity: float = 0.53
    orientations: np.ndarray = field(default=None, repr=False)
    face_offset: float = 0.0
    area_is_per_photodiode: bool = False

    def __post_init__(self):
        if self.num_photodiodes < 1:
            raise ValueError("need at least one photodiode")
        if self.total_area <= 0 or self.responsivity <= 0:
            raise ValueError("area and responsivity must be positive")
        if not 0 < self.fov_half_angle <= 90:
            raise ValueError("fov_half_angle must be in (0, 90] degrees")
        if self.orientations is None:
            object.__setattr__(
                self,
                "orientations",
                preset_mode_orientations(self.num_photodiodes, 30.0 if self.num_photodiodes > 1 else 0.0),
            )
        orient = np.asarray(self.orientations, dtype=float)
        if orient.shape != (self.num_photodiodes, 3):
            raise ValueError("orientations must have shape (M, 3)")
        orient.setflags(write=False)
        object.__setattr__(self, "orientations", orient)
        if self.num_photodiodes > 1:
            diff = orient[:, None, :] - orient[None, :, :]
            dist = np.linalg.norm(diff, axis=-1) + np.eye(self.num_photodiodes)
            if dist.min() < 1e-9:
                raise ValueError("photodiode orientations must be pairwise distinct")

    @property
    def photodiode_area(self) -> float:
        if self.area_is_per_photodiode:
            return self.total_area
        return self.total_area / self.num_photodiodes

    @property
    def face_offsets(self) -> np.ndarray:
        """(M, 3) displacement of each face from the detector centre."""
        horiz = self.orientations.copy()
        horiz[:, 2] = 0.0
        norm = np.linalg.norm(horiz, axis=1, keepdims=True)
        safe = np.where(norm > 0, norm, 1.0)
        return self.face_offset * np.where(norm > 0, horiz / safe, 0.0)


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float, float]
    receiver: ReceiverConfig
    connectivity_class: Connectivity | None = None


@dataclass(frozen=True)
class Scenario:
    """Immutable snapshot: room, lasers and users."""

    room: Room
    vcsels: tuple[Vcsel, ...]
    users: tuple[User, ...]

    def __post_init__(self):
        L = len(self.vcsels)
        for u in self.users:
            if u.receiver.num_photodiodes < L:
                raise ValueError(
                    f"user {u.id}: {u.receiver.num_photodiodes} photodiodes < {L} VCSELs"
                )

    @property
    def num_vcsels(self) -> int:
        return len(self.vcsels)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def vcsel_positions(self) -> np.ndarray:
        return np.array([v.position for v in self.vcsels], dtype=float)

    @property
    def user_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.users], dtype=float).reshape(-1, 3)

    @property
    def powers(self) -> np.ndarray:
        return np.array([v.optical_power for v in self.vcsels], dtype=float)

    def with_classes(self, full_ids) -> "Scenario":
        full_ids = set(full_ids)
        users = tuple(
            replace(
                u,
                connectivity_class=Connectivity.FULL if u.id in full_ids else Connectivity.PARTIAL,
            )
            for u in self.users
        )
        return replace(self, users=users)


def preset_mode_orientations(M: int, tilt_angle: float, azimuth_offset: float = 0.0) -> np.ndarray:
    """Unit normals on an azimuth ring, all tilted ``tilt_angle`` degrees off vertical.

    Face ``m`` (0-based) points at azimuth ``2*pi*m/M`` plus ``azimuth_offset``
    degrees.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0 <= tilt_angle < 90:
        raise ValueError("tilt_angle must be in [0, 90) degrees")
    theta = np.radians(tilt_angle)
    phi = 2 * np.pi * np.arange(M) / M + np.radians(azimuth_offset)
    out = np.column_stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.full(M, np.cos(theta))]
    )
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def build_vcsel_array(room: Room, rows: int, cols: int, template: Vcsel, pitch=None):
    """Place ``rows * cols`` copies of ``template`` on a ceiling grid.

    By default the grid tiles the whole ceiling (cell centres, spacing
    ``width/cols`` by ``depth/rows``). A scalar ``pitch`` instead packs the
    lasers into a compact array of that spacing, centred on the ceiling.
    Ids run 1..L in row-major order.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    if pitch is None:
        xs = (np.arange(cols) + 0.5) * room.width / cols
        ys = (np.arange(rows) + 0.5) * room.depth / rows
    else:
        if pitch <= 0:
            raise ValueError("pitch must be positive")
        xs = room.width / 2 + (np.arange(cols) - (cols - 1) / 2) * pitch
        ys = room.depth / 2 + (np.arange(rows) - (rows - 1) / 2) * pitch
    out = []
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            out.append(
                replace(template, id=i * cols + j + 1, position=(float(x), float(y), room.height))
            )
    return out


def sample_users(room: Room, K: int, seed, receiver: ReceiverConfig):
    """Drop ``K`` users uniformly on the receiver plane.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    xy = rng.uniform(0.0, 1.0, size=(K, 2)) * np.array([room.width, room.depth])
    z = room.receiver_plane_height
    return [
        User(id=k + 1, position=(float(x), float(y), z), receiver=receiver)
        for k, (x, y) in enumerate(xy)
    ]


def classify_users(snr_db: np.ndarray, snr_threshold_db: float):
    """Split users into full and partial connectivity sets.

    Parameters
    ----------
    snr_db : ndarray, shape (K, L)
        Best-photodiode SNR of every user from every VCSEL, in dB.
    snr_threshold_db : float
        A user is full-connectivity iff every entry of its row reaches this.

    Returns
    -------
    full, partial : ndarray of int
        0-based user indices.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    with np.errstate(invalid="ignore"):
        is_full = np.all(snr_db >= snr_threshold_db, axis=1)
    if snr_threshold_db == -np.inf:
        is_full[:] = True
    return np.flatnonzero(is_full), np.flatnonzero(~is_full)
