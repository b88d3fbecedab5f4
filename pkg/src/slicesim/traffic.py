"""Slice request classes, the time-varying load model, and event generation.

Two arrival regimes exist per class: a constant rate (static classes) and a
sinusoidal-squared rate

    rate(t) = amplitude * sin^2(pi * t / period)

for dynamic classes. The per-class offered load on resource j is

    load_j(t) = (1 / C_j) * (rate(t) / mu) * units_j

where C_j is the substrate's total capacity of j, 1/mu the mean lifetime
and units_j the resource units one request of the class occupies. The
global load is the sum over classes and stays within [0, 1] as long as
every dynamic amplitude respects  amplitude <= C_j * mu / units_j.

Arrival streams are sampled by thinning a homogeneous Poisson process at
the rate bound; each class owns an independent RNG substream derived from
the master seed, so adding or removing a class never perturbs the others.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigurationError

RESOURCES = ("cpu", "ram", "bw")

FORECAST_POINTS = 100


@dataclass(frozen=True)
class StaticArrival:
    rate: float


@dataclass(frozen=True)
class DynamicArrival:
    amplitude: float
    period: float


@dataclass(frozen=True)
class SliceClass:
    """A slice request template: chain length, per-unit demands, traffic law."""
    id: int
    vnf_count: int
    req_cpu: float
    req_ram: float
    req_bw: float
    mean_lifetime: float
    arrival: StaticArrival | DynamicArrival
    name: str = ""

    def __post_init__(self):
        if self.vnf_count < 1:
            raise ConfigurationError(f"class {self.id}: vnf_count must be >= 1")
        if min(self.req_cpu, self.req_ram, self.req_bw) <= 0:
            raise ConfigurationError(f"class {self.id}: demands must be > 0")
        if self.mean_lifetime <= 0:
            raise ConfigurationError(f"class {self.id}: mean_lifetime must be > 0")
        if isinstance(self.arrival, DynamicArrival):
            if self.arrival.amplitude < 0 or self.arrival.period <= 0:
                raise ConfigurationError(
                    f"class {self.id}: amplitude must be >= 0 and period > 0")
        elif self.arrival.rate < 0:
            raise ConfigurationError(f"class {self.id}: rate must be >= 0")

    @property
    def is_dynamic(self) -> bool:
        return isinstance(self.arrival, DynamicArrival)

    def resource_units(self, resource: str) -> float:
        """Total units of a resource one request of this class occupies."""
        if resource == "cpu":
            return self.vnf_count * self.req_cpu
        if resource == "ram":
            return self.vnf_count * self.req_ram
        if resource == "bw":
            return (self.vnf_count - 1) * self.req_bw
        raise KeyError(f"unknown resource {resource!r}")

    def rate_bound(self) -> float:
        return self.arrival.amplitude if self.is_dynamic else self.arrival.rate


def arrival_rate(cls: SliceClass, t):
    """Arrival intensity of one class at time t (scalar or array)."""
    if cls.is_dynamic:
        return cls.arrival.amplitude * np.sin(np.pi * np.asarray(t, dtype=np.float64)
                                              / cls.arrival.period) ** 2
    return np.full_like(np.asarray(t, dtype=np.float64), cls.arrival.rate) \
        if np.ndim(t) else cls.arrival.rate


@dataclass(frozen=True)
class SliceRequest:
    """One concrete arrival: a VNF chain with demands copied from its class."""
    uid: int
    class_id: int
    arrival_time: float
    lifetime: float
    vnfs: tuple[tuple[float, float], ...]  # (req_cpu, req_ram) per VNF
    vls: tuple[float, ...]                 # req_bw of VL (v-1, v), v = 2..|V|

    def __post_init__(self):
        if len(self.vls) != len(self.vnfs) - 1:
            raise ConfigurationError("need exactly |V| - 1 virtual links")
        if self.lifetime <= 0:
            raise ConfigurationError("lifetime must be > 0")

    @property
    def vnf_count(self) -> int:
        return len(self.vnfs)


def request_from_class(cls: SliceClass, uid: int, arrival_time: float,
                       lifetime: float) -> SliceRequest:
    return SliceRequest(
        uid=uid, class_id=cls.id, arrival_time=arrival_time, lifetime=lifetime,
        vnfs=((cls.req_cpu, cls.req_ram),) * cls.vnf_count,
        vls=(cls.req_bw,) * (cls.vnf_count - 1),
    )


class LoadModel:
    """Offered-load bookkeeping for a set of classes on a given capacity."""

    def __init__(self, classes: Iterable[SliceClass], total_capacity: dict[str, float]):
        self.classes = list(classes)
        self.total_capacity = dict(total_capacity)
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("class ids must be unique")
        for j in RESOURCES:
            if self.total_capacity.get(j, 0.0) <= 0:
                raise ConfigurationError(f"total capacity of {j!r} must be > 0")
        for cls in self.classes:
            self.check_amplitude_bound(cls)

    @classmethod
    def from_network(cls, classes: Iterable[SliceClass], net) -> "LoadModel":
        caps = {j: net.total_capacity(j) for j in RESOURCES}
        return cls(classes, caps)

    def check_amplitude_bound(self, cls: SliceClass) -> None:
        """Reject dynamic amplitudes that would push a per-class load above 1."""
        if not cls.is_dynamic:
            return
        mu = 1.0 / cls.mean_lifetime
        for j in RESOURCES:
            bound = self.total_capacity[j] * mu / cls.resource_units(j)
            if cls.arrival.amplitude > bound + 1e-12:
                raise ConfigurationError(
                    f"class {cls.id}: amplitude {cls.arrival.amplitude} exceeds "
                    f"load bound {bound:.6g} for resource {j!r}")

    def class_load(self, cls: SliceClass, resource: str, t):
        """Offered load fraction of one class on one resource at time t."""
        units = cls.resource_units(resource)
        mean_in_system = arrival_rate(cls, t) * cls.mean_lifetime
        return mean_in_system * units / self.total_capacity[resource]

    def global_load(self, resource: str, t):
        """Sum of class loads on one resource at time t (scalar or array)."""
        total = 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t), dtype=np.float64)
        for cls in self.classes:
            total = total + self.class_load(cls, resource, t)
        return total

    def load_forecast(self, resource: str, t_a: float) -> np.ndarray:
        """Load at the 100 unit-spaced instants starting at the arrival time."""
        ts = t_a + np.arange(FORECAST_POINTS, dtype=np.float64)
        return np.asarray(self.global_load(resource, ts), dtype=np.float64)

    def forecast_features(self, t_a: float) -> np.ndarray:
        """Concatenated cpu|ram|bw forecasts (300 values) for the load state."""
        return np.concatenate([self.load_forecast(j, t_a) for j in RESOURCES])


# -- event generation ---------------------------------------------------


@dataclass(frozen=True)
class Arrival:
    time: float
    request: SliceRequest

    @property
    def uid(self) -> int:
        return self.request.uid

    @property
    def class_id(self) -> int:
        return self.request.class_id


@dataclass(frozen=True)
class Departure:
    time: float
    uid: int
    class_id: int


Event = Arrival | Departure


def sample_arrivals(rate_fn: Callable[[float], float], rate_bound: float,
                    horizon: float, rng: np.random.Generator) -> list[float]:
    """Sample a non-homogeneous Poisson process on [0, horizon) by thinning.

    Candidate points come from a homogeneous process at rate_bound; each
    candidate at time t survives with probability rate_fn(t) / rate_bound.
    rate_fn must never exceed rate_bound.
    """
    if rate_bound <= 0:
        return []
    times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rate_bound)
        if t >= horizon:
            break
        if rng.random() * rate_bound <= rate_fn(t):
            times.append(t)
    return times


def class_rng(seed: int, class_id: int) -> np.random.Generator:
    """Independent per-class substream of the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(class_id,)))


def generate_events(model: LoadModel, horizon: float, seed: int,
                    lifetime_dist: str = "exponential") -> list[Event]:
    """Generate the merged arrival/departure stream over [0, horizon).

    Lifetimes are exponential with the class mean by default
    (lifetime_dist="fixed" makes every lifetime the class mean). Departures
    of all arrivals are included, even past the horizon. The stream is
    sorted by time, departures first at equal times, then class id, then
    uid.
    """
    if horizon <= 0:
        raise ConfigurationError("horizon must be > 0")
    if lifetime_dist not in ("exponential", "fixed"):
        raise ConfigurationError(f"unknown lifetime_dist {lifetime_dist!r}")

    per_class: list[tuple[SliceClass, float, float]] = []
    for cls in model.classes:
        rng = class_rng(seed, cls.id)
        times = sample_arrivals(lambda t: arrival_rate(cls, t), cls.rate_bound(),
                                horizon, rng)
        if lifetime_dist == "exponential":
            lifetimes = rng.exponential(cls.mean_lifetime, size=len(times))
        else:
            lifetimes = np.full(len(times), cls.mean_lifetime)
        per_class.extend((cls, t, lt) for t, lt in zip(times, lifetimes))

    # uids are dense in global arrival order
    per_class.sort(key=lambda item: (item[1], item[0].id))
    events: list[Event] = []
    for uid, (cls, t, lifetime) in enumerate(per_class):
        req = request_from_class(cls, uid, t, float(lifetime))
        events.append(Arrival(t, req))
        events.append(Departure(t + float(lifetime), req.uid, cls.id))
    events.sort(key=event_sort_key)
    return events


def event_sort_key(ev: Event):
    # departures before arrivals at equal times, freeing capacity first
    kind = 0 if isinstance(ev, Departure) else 1
    return (ev.time, kind, ev.class_id, ev.uid)


# -- event stream files ----------------------------------------------------


def export_events(events: Iterable[Event], path) -> None:
    """Write the stream as line-delimited JSON records."""
    with open(path, "w") as fh:
        for ev in events:
            kind = "departure" if isinstance(ev, Departure) else "arrival"
            fh.write(json.dumps({"time": ev.time, "kind": kind,
                                 "uid": ev.uid, "class": ev.class_id}) + "\n")


def load_events(path, classes: Iterable[SliceClass]) -> list[Event]:
    """Rebuild an event stream from an exported file.

    Request demands are reconstructed from the class definitions; lifetimes
    from the matching departure record. Arrivals whose departure fell past
    the exported horizon get no departure event.
    """
    by_id = {c.id: c for c in classes}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    departures = {r["uid"]: r["time"] for r in rows if r["kind"] == "departure"}
    events: list[Event] = []
    for r in rows:
        if r["kind"] != "arrival":
            continue
        cls = by_id.get(r["class"])
        if cls is None:
            raise ConfigurationError(
                f"event stream references unknown class {r['class']}")
        dep = departures.get(r["uid"])
        lifetime = (dep - r["time"]) if dep is not None else cls.mean_lifetime
        req = request_from_class(cls, r["uid"], r["time"], lifetime)
        events.append(Arrival(r["time"], req))
        if dep is not None:
            events.append(Departure(dep, req.uid, cls.id))
    events.sort(key=event_sort_key)
    return events


def reference_classes() -> list[SliceClass]:
    """The two bundled request classes: a dynamic volatile class and a
    static long-term class, both with the eMBB per-VNF demand profile."""
    return [
        SliceClass(id=0, name="volatile", vnf_count=5, req_cpu=25.0,
                   req_ram=150.0, req_bw=2.0, mean_lifetime=20.0,
                   arrival=DynamicArrival(amplitude=1.5, period=96.0)),
        SliceClass(id=1, name="longterm", vnf_count=10, req_cpu=25.0,
                   req_ram=150.0, req_bw=2.0, mean_lifetime=500.0,
                   arrival=StaticArrival(rate=0.02)),
    ]
