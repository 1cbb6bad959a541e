"""Scenario configuration trees, named presets and config hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .allocation import SolverConfig
from .optics import NoiseModel
from .scenario import (
    ReceiverConfig,
    Room,
    Scenario,
    Vcsel,
    build_vcsel_array,
    preset_mode_orientations,
    sample_users,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to draw one snapshot.

    Defaults are the ``paper-table1`` values; fields not fixed by the
    table (laser power, thermal noise, geometry of the detector, receiver
    plane) are modelling choices. ``bandwidth`` converts spectral efficiency
    to bits/s; ``noise_bandwidth`` sets the receiver noise and is kept
    separate so that rescaling one does not silently change the other.
    """

    width: float = 5.0
    depth: float = 5.0
    height: float = 3.0
    receiver_plane_height: float = 0.85
    rows: int = 4
    cols: int = 6
    pitch: float | None = None

    optical_power: float = 0.1
    beam_waist: float = 5e-6
    wavelength: float = 830e-9
    bandwidth: float = 5e9
    noise_bandwidth: float = 5e9
    rin_db: float = -155.0

    num_photodiodes: int | None = None
    total_area: float = 15e-6
    area_is_per_photodiode: bool = False
    fov_half_angle: float = 45.0
    responsivity: float = 0.53
    tilt_angle: float = 30.0
    azimuth_offset: float = 0.0
    face_offset: float = 0.01
    thermal_psd: float = 1e-22

    num_users: int = 20
    seed: int = 0
    snr_threshold_db: float = 0.0
    beta: float | None = None
    min_rate: float = 1e-4

    solver: SolverConfig = field(default_factory=SolverConfig)

    @property
    def num_vcsels(self) -> int:
        return self.rows * self.cols

    def replace(self, **kw) -> "ScenarioConfig":
        solver_kw = {k[7:]: kw.pop(k) for k in list(kw) if k.startswith("solver_")}
        cfg = dataclasses.replace(self, **kw)
        if solver_kw:
            cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, **solver_kw))
        return cfg

    # -- serialisation --------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["solver"] = dataclasses.asdict(self.solver)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        preset = d.pop("preset", None)
        base = PRESETS[preset] if preset else cls()
        solver = d.pop("solver", None) or {}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = dataclasses.replace(base, **d)
        if solver:
            cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, **solver))
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # -- object construction ---------------------------------------------

    def room(self) -> Room:
        return Room(self.width, self.depth, self.height, self.receiver_plane_height)

    def receiver(self) -> ReceiverConfig:
        M = self.num_photodiodes or self.num_vcsels
        return ReceiverConfig(
            num_photodiodes=M,
            total_area=self.total_area,
            fov_half_angle=self.fov_half_angle,
            responsivity=self.responsivity,
            orientations=preset_mode_orientations(M, self.tilt_angle, self.azimuth_offset),
            face_offset=self.face_offset,
            area_is_per_photodiode=self.area_is_per_photodiode,
        )

    def vcsels(self):
        template = Vcsel(
            id=0,
            position=(0.0, 0.0, self.height),
            optical_power=self.optical_power,
            beam_waist=self.beam_waist,
            wavelength=self.wavelength,
            bandwidth=self.bandwidth,
            rin=10 ** (self.rin_db / 10),
        )
        return build_vcsel_array(self.room(), self.rows, self.cols, template, self.pitch)

    def noise(self) -> NoiseModel:
        return NoiseModel(
            bandwidth=self.noise_bandwidth,
            responsivity=self.responsivity,
            thermal_psd=self.thermal_psd,
            rin=10 ** (self.rin_db / 10),
        )

    def scenario(self, seed=None, num_users=None) -> Scenario:
        room = self.room()
        seed = self.seed if seed is None else seed
        users = sample_users(room, num_users or self.num_users, seed, self.receiver())
        return Scenario(room, tuple(self.vcsels()), tuple(users))


PAPER_TABLE1 = ScenarioConfig()

# Four lasers over a small work surface: every user sees at least one
# beam and users near the middle see all of them.
DESK = ScenarioConfig(
    width=0.25,
    depth=0.25,
    rows=2,
    cols=2,
    num_users=8,
    optical_power=0.3,
    azimuth_offset=45.0,
    face_offset=0.02,
)

PRESETS = {"paper-table1": PAPER_TABLE1, "desk": DESK}


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
