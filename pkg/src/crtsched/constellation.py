"""Walker-style LEO shells, +Grid inter-satellite links and per-slot topology snapshots.

Orbits are ideal circles around a spherical Earth. Satellites are addressed
internally by an integer node id ``plane * sats_per_plane + index``; the
:class:`SatelliteId` pair is the user-facing form.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from .exceptions import InvalidParameterError, UnknownSatelliteError
from .validation import check_count, check_fraction, check_positive, check_real

EARTH_RADIUS_KM = 6371.0
GM_EARTH_KM3_S2 = 398600.4418
SPEED_OF_LIGHT_M_S = 299_792_458.0
DEFAULT_ISL_BANDWIDTH_BPS = 100e6

TOPOLOGY_FORMAT = "crtsched.topology/1"

LinkKey = Tuple[int, int]


class SatelliteId(NamedTuple):
    plane: int
    index: int


class Link(NamedTuple):
    prop_delay: float  # seconds
    bandwidth: float  # bits per second


@dataclass(frozen=True)
class ShellParams:
    planes: int
    sats_per_plane: int
    altitude: float  # km
    inclination: float  # degrees
    phasing_offset: float = 0.5  # fraction of the in-plane spacing between adjacent planes
    epoch: float = 0.0  # seconds
    # Angular span of ascending nodes. None picks 180 deg for near-polar shells (Walker star)
    # and 360 deg otherwise (Walker delta).
    raan_spread: Optional[float] = None

    def __post_init__(self):
        check_count(self.planes, "planes", 1)
        check_count(self.sats_per_plane, "sats_per_plane", 1)
        check_positive(self.altitude, "altitude")
        check_real(self.inclination, "inclination", low=0.0, high=180.0)
        check_real(self.phasing_offset, "phasing_offset")
        check_real(self.epoch, "epoch")
        if self.raan_spread is not None:
            check_real(self.raan_spread, "raan_spread", low=0.0, high=360.0, low_inclusive=False)

    @property
    def num_satellites(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def effective_raan_spread(self) -> float:
        if self.raan_spread is not None:
            return float(self.raan_spread)
        return 180.0 if 80.0 <= self.inclination <= 100.0 else 360.0

    @property
    def is_star(self) -> bool:
        return self.effective_raan_spread < 360.0


IRIDIUM = ShellParams(planes=6, sats_per_plane=11, altitude=780.0, inclination=86.4)
STARLINK = ShellParams(planes=72, sats_per_plane=22, altitude=550.0, inclination=53.0,
                       phasing_offset=39 / 72)


@dataclass(frozen=True)
class IslRule:
    """+Grid wiring: two intra-plane ring neighbours and two same-index neighbours in adjacent planes.

    Inter-plane links are switched off while either endpoint is above
    ``polar_cutoff`` degrees of latitude (``None`` disables the cutoff).
    """

    polar_cutoff: Optional[float] = 70.0
    bandwidth: float = DEFAULT_ISL_BANDWIDTH_BPS

    def __post_init__(self):
        if self.polar_cutoff is not None:
            check_real(self.polar_cutoff, "polar_cutoff", low=0.0, high=90.0)
        check_positive(self.bandwidth, "bandwidth")


@dataclass(frozen=True)
class PerturbationConfig:
    link_fail_fraction: float = 0.0
    delay_perturb_fraction: float = 0.0
    delay_perturb_magnitude: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        check_fraction(self.link_fail_fraction, "link_fail_fraction")
        check_fraction(self.delay_perturb_fraction, "delay_perturb_fraction")
        # magnitude >= 1 could drive a delay to zero or below
        check_real(self.delay_perturb_magnitude, "delay_perturb_magnitude", low=0.0, high=1.0,
                   high_inclusive=False)
        check_count(self.rng_seed, "rng_seed")


@dataclass(frozen=True, eq=False)
class TopologySnapshot:
    slot: int
    duration: float
    sample_time: float
    nodes: Tuple[int, ...]
    links: Mapping[LinkKey, Link]
    sats_per_plane: int = 1

    def __eq__(self, other):
        if not isinstance(other, TopologySnapshot):
            return NotImplemented
        return (self.slot, self.duration, self.sample_time, self.nodes, self.sats_per_plane) == (
            other.slot, other.duration, other.sample_time, other.nodes, other.sats_per_plane
        ) and dict(self.links) == dict(other.links)

    __hash__ = None

    def has_link(self, u: int, v: int) -> bool:
        return (u, v) in self.links

    def prop_delay(self, u: int, v: int) -> float:
        return self.links[(u, v)].prop_delay

    def satellite(self, node: int) -> SatelliteId:
        return SatelliteId(*divmod(node, self.sats_per_plane))

    def node_of(self, sat: SatelliteId) -> int:
        return sat.plane * self.sats_per_plane + sat.index

    @cached_property
    def physical_links(self) -> List[LinkKey]:
        """Undirected adjacencies as sorted ``(u, v)`` pairs with ``u < v``."""
        return sorted({(min(u, v), max(u, v)) for (u, v) in self.links})

    @cached_property
    def adjacency(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {n: [] for n in self.nodes}
        for (u, v) in sorted(self.links):
            adj[u].append(v)
        return adj

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.nodes).encode())
        for key in sorted(self.links):
            link = self.links[key]
            h.update(f"{key[0]},{key[1]},{link.prop_delay!r},{link.bandwidth!r};".encode())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "duration_s": self.duration,
            "sample_time_s": self.sample_time,
            "nodes": list(self.nodes),
            "links": [
                {"u": u, "v": v, "prop_delay_s": l.prop_delay, "bandwidth_bps": l.bandwidth}
                for (u, v), l in sorted(self.links.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, sats_per_plane: int = 1) -> "TopologySnapshot":
        links = {
            (int(e["u"]), int(e["v"])): Link(float(e["prop_delay_s"]), float(e["bandwidth_bps"]))
            for e in data["links"]
        }
        return cls(
            slot=int(data["slot"]),
            duration=float(data["duration_s"]),
            sample_time=float(data["sample_time_s"]),
            nodes=tuple(int(n) for n in data["nodes"]),
            links=links,
            sats_per_plane=sats_per_plane,
        )


@dataclass(frozen=True)
class ConstellationModel:
    params: ShellParams
    isl: IslRule = field(default_factory=IslRule)

    @property
    def radius(self) -> float:
        return EARTH_RADIUS_KM + self.params.altitude

    @property
    def mean_motion(self) -> float:
        """Angular rate in rad/s."""
        return math.sqrt(GM_EARTH_KM3_S2 / self.radius**3)

    @property
    def orbital_period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    @property
    def num_satellites(self) -> int:
        return self.params.num_satellites

    @cached_property
    def _raan(self) -> np.ndarray:
        p = self.params
        return np.radians(np.arange(p.planes) * p.effective_raan_spread / p.planes)

    @cached_property
    def _initial_anomaly(self) -> np.ndarray:
        p = self.params
        planes = np.arange(p.planes)[:, None]
        idx = np.arange(p.sats_per_plane)[None, :]
        return 2.0 * math.pi * (idx + p.phasing_offset * planes) / p.sats_per_plane

    def satellites(self) -> List[SatelliteId]:
        p = self.params
        return [SatelliteId(a, b) for a in range(p.planes) for b in range(p.sats_per_plane)]

    def node_of(self, sat: SatelliteId) -> int:
        p = self.params
        plane, index = sat
        if not (0 <= plane < p.planes and 0 <= index < p.sats_per_plane):
            raise UnknownSatelliteError(f"no satellite {tuple(sat)} in a {p.planes}x{p.sats_per_plane} shell")
        return plane * p.sats_per_plane + index

    def satellite(self, node: int) -> SatelliteId:
        if not 0 <= node < self.num_satellites:
            raise UnknownSatelliteError(f"no node {node}")
        return SatelliteId(*divmod(node, self.params.sats_per_plane))

    def positions(self, t: float) -> np.ndarray:
        """ECI positions (km) of every satellite at time ``t``, shape ``(planes * sats_per_plane, 3)``."""
        inc = math.radians(self.params.inclination)
        u = self._initial_anomaly + self.mean_motion * t
        raan = self._raan[:, None]
        cu, su = np.cos(u), np.sin(u)
        co, so = np.cos(raan), np.sin(raan)
        x = co * cu - so * su * math.cos(inc)
        y = so * cu + co * su * math.cos(inc)
        z = su * math.sin(inc) * np.ones_like(raan)
        return self.radius * np.stack([x, y, z], axis=-1).reshape(-1, 3)

    def latitudes(self, t: float) -> np.ndarray:
        """Geocentric latitude in degrees of every satellite at ``t``."""
        inc = math.radians(self.params.inclination)
        u = self._initial_anomaly + self.mean_motion * t
        return np.degrees(np.arcsin(np.sin(u) * math.sin(inc))).reshape(-1)

    @cached_property
    def grid_pairs(self) -> Tuple[List[LinkKey], List[LinkKey]]:
        """Candidate (intra-plane, inter-plane) physical pairs of the +Grid rule, as sorted tuples."""
        p = self.params
        n = p.sats_per_plane
        intra, inter = set(), set()
        if n >= 2:
            for plane in range(p.planes):
                for j in range(n):
                    a, b = plane * n + j, plane * n + (j + 1) % n
                    intra.add((min(a, b), max(a, b)))
        for plane in range(p.planes - 1):
            for j in range(n):
                a, b = plane * n + j, (plane + 1) * n + j
                inter.add((min(a, b), max(a, b)))
        if not p.is_star and p.planes >= 3:
            # closing the delta shell: plane P-1 meets plane 0 shifted by the accumulated phasing
            shift = int(round(p.planes * p.phasing_offset))
            for j in range(n):
                a, b = (p.planes - 1) * n + j, (j + shift) % n
                inter.add((min(a, b), max(a, b)))
        return sorted(intra), sorted(inter - intra)

    def snapshot_at(self, slot: int, t: float, duration: float) -> TopologySnapshot:
        pos = self.positions(t)
        lat = np.abs(self.latitudes(t))
        intra, inter = self.grid_pairs
        cutoff = self.isl.polar_cutoff
        bw = self.isl.bandwidth
        links: Dict[LinkKey, Link] = {}
        for kind, pairs in (("intra", intra), ("inter", inter)):
            for a, b in pairs:
                if kind == "inter" and cutoff is not None and max(lat[a], lat[b]) > cutoff:
                    continue
                dist_m = float(np.linalg.norm(pos[a] - pos[b])) * 1000.0
                delay = dist_m / SPEED_OF_LIGHT_M_S
                links[(a, b)] = Link(delay, bw)
                links[(b, a)] = Link(delay, bw)
        return TopologySnapshot(
            slot=slot,
            duration=duration,
            sample_time=t,
            nodes=tuple(range(self.num_satellites)),
            links=links,
            sats_per_plane=self.params.sats_per_plane,
        )


def build_constellation(params: ShellParams, isl: Optional[IslRule] = None) -> ConstellationModel:
    if not isinstance(params, ShellParams):
        raise InvalidParameterError("params must be a ShellParams")
    return ConstellationModel(params, isl if isl is not None else IslRule())


def satellite_position(model: ConstellationModel, sat: SatelliteId, t: float) -> np.ndarray:
    node = model.node_of(sat)
    return model.positions(t)[node]


def snapshot_sequence(model: ConstellationModel, num_slots: int, slot_duration: float) -> List[TopologySnapshot]:
    check_count(num_slots, "num_slots", 1)
    check_positive(slot_duration, "slot_duration")
    t0 = model.params.epoch
    return [model.snapshot_at(tau, t0 + tau * slot_duration, slot_duration) for tau in range(num_slots)]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def apply_perturbation(snapshot: TopologySnapshot, cfg: PerturbationConfig) -> TopologySnapshot:
    """Remove a fraction of physical links and stretch or shrink the delay of another fraction.

    Both directions of a physical link are treated together. The outcome is a
    pure function of ``(snapshot, cfg)``.
    """
    if cfg.link_fail_fraction == 0.0 and cfg.delay_perturb_fraction == 0.0:
        return snapshot
    rng = np.random.default_rng(cfg.rng_seed)
    phys = snapshot.physical_links
    n_fail = _round_half_up(cfg.link_fail_fraction * len(phys))
    failed = set()
    if n_fail:
        failed = {phys[i] for i in rng.choice(len(phys), size=n_fail, replace=False)}
    remaining = [e for e in phys if e not in failed]
    n_pert = _round_half_up(cfg.delay_perturb_fraction * len(remaining))
    factors: Dict[LinkKey, float] = {}
    if n_pert:
        chosen = rng.choice(len(remaining), size=n_pert, replace=False)
        draws = rng.uniform(1.0 - cfg.delay_perturb_magnitude, 1.0 + cfg.delay_perturb_magnitude, size=n_pert)
        for i, f in zip(sorted(chosen), draws):
            factors[remaining[i]] = float(f)
    links: Dict[LinkKey, Link] = {}
    for (u, v), link in snapshot.links.items():
        key = (min(u, v), max(u, v))
        if key in failed:
            continue
        f = factors.get(key)
        links[(u, v)] = link if f is None else Link(link.prop_delay * f, link.bandwidth)
    return replace(snapshot, links=links)


def perturb_sequence(snapshots: Iterable[TopologySnapshot], cfg: PerturbationConfig) -> List[TopologySnapshot]:
    """Independent perturbation per slot, seeded by ``(cfg.rng_seed, slot)``."""
    out = []
    for snap in snapshots:
        seed = int(np.random.SeedSequence([cfg.rng_seed, snap.slot]).generate_state(1)[0])
        out.append(apply_perturbation(snap, replace(cfg, rng_seed=seed)))
    return out


def sequence_to_dict(snapshots: List[TopologySnapshot], params: Optional[ShellParams] = None) -> dict:
    out = {"format": TOPOLOGY_FORMAT, "snapshots": [s.to_dict() for s in snapshots]}
    if snapshots:
        out["sats_per_plane"] = snapshots[0].sats_per_plane
    if params is not None:
        out["shell"] = {
            "planes": params.planes,
            "sats_per_plane": params.sats_per_plane,
            "altitude_km": params.altitude,
            "inclination_deg": params.inclination,
            "phasing_offset": params.phasing_offset,
            "epoch_s": params.epoch,
        }
    return out


def sequence_from_dict(data: dict) -> List[TopologySnapshot]:
    if data.get("format") != TOPOLOGY_FORMAT:
        raise InvalidParameterError(f"unsupported topology format {data.get('format')!r}")
    spp = int(data.get("sats_per_plane", 1))
    return [TopologySnapshot.from_dict(s, spp) for s in data["snapshots"]]


def save_topology(path, snapshots: List[TopologySnapshot], params: Optional[ShellParams] = None) -> None:
    with open(path, "w") as fh:
        json.dump(sequence_to_dict(snapshots, params), fh, indent=1)


def load_topology(path) -> List[TopologySnapshot]:
    with open(path) as fh:
        return sequence_from_dict(json.load(fh))
