"""Simulation world: node geometry, path loss, Rician channels, configuration.

Units are fixed throughout the package: powers in Watts, distances in meters,
reference loss in dB.  The downlink has one multi-antenna secondary access
point (SAP), L secondary users (SUs), K protected primary users (PUs) and a
reflecting surface with M passive elements.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError

# Link classes, keyed by endpoints: sap_pu, sap_su, sap_irs, irs_pu, irs_su.
LINK_CLASSES = ("sap_pu", "sap_su", "sap_irs", "irs_pu", "irs_su")


def _default_rician() -> dict:
    # Surface placement gives the reflected links a line-of-sight component;
    # every SAP-side link is pure Rayleigh.
    return {"sap_pu": 0.0, "sap_su": 0.0, "sap_irs": 0.0, "irs_pu": 1.0, "irs_su": 1.0}


def _default_exponents() -> dict:
    return {name: 2.0 for name in LINK_CLASSES}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one simulation scenario.

    ``noise_power_pu_w`` is carried for completeness (the interference caps
    are on received power, so it never enters the optimization).
    """

    num_pus: int = 3
    num_sus: int = 3
    num_elements: int = 20
    sap_antennas: int = 4
    pu_antennas: int = 2
    su_antennas: int = 2
    streams_per_su: int = 2
    max_power_w: float = 5.0
    interference_caps_w: tuple = (2e-4, 2e-4, 2e-4)
    noise_power_pu_w: float = 1e-7  # -40 dBm
    noise_power_su_w: float = 1e-7  # -40 dBm
    su_weights: tuple = (1.0, 1.0, 1.0)
    sap_position: tuple = (0.0, 0.0)
    irs_position: tuple = (30.0, 5.0)
    pu_cluster_center: tuple = (50.0, 0.0)
    pu_cluster_radius: float = 2.0
    su_cluster_center: tuple = (30.0, 0.0)
    su_cluster_radius: float = 2.0
    rician_factors: dict = field(default_factory=_default_rician)
    path_loss_exponents: dict = field(default_factory=_default_exponents)
    ref_loss_db: float = -30.0  # path loss at d0 = 1 m
    seed: int = 0

    def __post_init__(self):
        problems = validate_config_fields(dataclasses.asdict(self))
        if problems:
            raise ConfigError(problems)

    def replace(self, **kwargs) -> "ScenarioConfig":
        return dataclasses.replace(self, **kwargs)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=False)


def validate_config_fields(raw: Mapping) -> list:
    """Check every ScenarioConfig invariant; return one message per violation."""
    problems = []

    def _num(name, cond, msg):
        value = raw.get(name)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not cond(value):
            problems.append(f"{name}: {msg} (got {value!r})")
            return None
        return value

    k = _num("num_pus", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    l = _num("num_sus", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    _num("num_elements", lambda v: v >= 0 and v == int(v), "must be an integer >= 0")
    n_sa = _num("sap_antennas", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    _num("pu_antennas", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    n_su = _num("su_antennas", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    d = _num("streams_per_su", lambda v: v >= 1 and v == int(v), "must be an integer >= 1")
    if d is not None and n_sa is not None and n_su is not None and d > min(n_sa, n_su):
        problems.append(
            f"streams_per_su: must satisfy 1 <= d <= min(sap_antennas, su_antennas)"
            f" = {min(n_sa, n_su)} (got {d})"
        )
    _num("max_power_w", lambda v: v > 0, "must be > 0 Watts")
    _num("noise_power_pu_w", lambda v: v > 0, "must be > 0 Watts")
    _num("noise_power_su_w", lambda v: v > 0, "must be > 0 Watts")
    _num("pu_cluster_radius", lambda v: v >= 0, "must be >= 0 meters")
    _num("su_cluster_radius", lambda v: v >= 0, "must be >= 0 meters")
    _num("ref_loss_db", lambda v: math.isfinite(v), "must be finite dB")
    _num("seed", lambda v: v == int(v) and v >= 0, "must be a nonnegative integer")

    caps = raw.get("interference_caps_w")
    if not isinstance(caps, (list, tuple)) or (k is not None and len(caps) != k):
        problems.append(
            f"interference_caps_w: must be a list of length num_pus (got {caps!r})"
        )
    elif any(not isinstance(c, (int, float)) or c <= 0 for c in caps):
        problems.append(f"interference_caps_w: every cap must be > 0 Watts (got {caps!r})")

    weights = raw.get("su_weights")
    if not isinstance(weights, (list, tuple)) or (l is not None and len(weights) != l):
        problems.append(f"su_weights: must be a list of length num_sus (got {weights!r})")
    elif any(not isinstance(w, (int, float)) or w <= 0 for w in weights):
        problems.append(f"su_weights: every weight must be > 0 (got {weights!r})")

    for name in ("sap_position", "irs_position", "pu_cluster_center", "su_cluster_center"):
        pos = raw.get(name)
        if (
            not isinstance(pos, (list, tuple))
            or len(pos) != 2
            or any(not isinstance(p, (int, float)) for p in pos)
        ):
            problems.append(f"{name}: must be a 2-D position in meters (got {pos!r})")

    for name, table in (("rician_factors", raw.get("rician_factors")),
                        ("path_loss_exponents", raw.get("path_loss_exponents"))):
        if not isinstance(table, Mapping) or set(table) != set(LINK_CLASSES):
            problems.append(f"{name}: must map exactly the link classes {LINK_CLASSES}")
            continue
        for key, value in table.items():
            if not isinstance(value, (int, float)) or value < 0:
                problems.append(f"{name}.{key}: must be >= 0 (got {value!r})")

    return problems


def load_config(source) -> ScenarioConfig:
    """Build a ScenarioConfig from a JSON file path, JSON string, or mapping.

    Unknown fields are rejected and every invariant violation is reported at
    once, each message naming the offending field.
    """
    if isinstance(source, Mapping):
        raw = dict(source)
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, TypeError):
            text = str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"malformed JSON: {exc}"]) from exc
        if not isinstance(raw, dict):
            raise ConfigError(["config document must be a JSON object"])

    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    problems = [f"{name}: unknown field" for name in sorted(set(raw) - known)]

    defaults = {f.name: (f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default)
                for f in dataclasses.fields(ScenarioConfig)}
    merged = {**defaults, **{k: v for k, v in raw.items() if k in known}}
    for name in ("interference_caps_w", "su_weights", "sap_position", "irs_position",
                 "pu_cluster_center", "su_cluster_center"):
        if isinstance(merged.get(name), list):
            merged[name] = tuple(merged[name])
    problems.extend(validate_config_fields(merged))
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**merged)


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all five baseband channel families (linear amplitude gains).

    sap_to_pu[k]: (pu_antennas, sap_antennas)    sap_to_su[l]: (su_antennas, sap_antennas)
    sap_to_irs:   (num_elements, sap_antennas)   irs_to_pu[k]: (pu_antennas, num_elements)
    irs_to_su[l]: (su_antennas, num_elements)
    """

    sap_to_pu: tuple
    sap_to_su: tuple
    sap_to_irs: np.ndarray
    irs_to_pu: tuple
    irs_to_su: tuple

    @property
    def num_pus(self) -> int:
        return len(self.sap_to_pu)

    @property
    def num_sus(self) -> int:
        return len(self.sap_to_su)

    @property
    def num_elements(self) -> int:
        return self.sap_to_irs.shape[0]

    @property
    def sap_antennas(self) -> int:
        return self.sap_to_irs.shape[1]

    def validate(self) -> None:
        n_sa = self.sap_antennas
        m = self.num_elements
        for name, mats, rows_cols in (
            ("sap_to_pu", self.sap_to_pu, lambda h: h.shape[1] == n_sa),
            ("sap_to_su", self.sap_to_su, lambda h: h.shape[1] == n_sa),
            ("irs_to_pu", self.irs_to_pu, lambda h: h.shape[1] == m),
            ("irs_to_su", self.irs_to_su, lambda h: h.shape[1] == m),
        ):
            for i, h in enumerate(mats):
                if h.ndim != 2 or not rows_cols(h):
                    raise DimensionMismatchError(f"{name}[{i}] has shape {h.shape}")
                if not np.all(np.isfinite(h)):
                    raise ValueError(f"{name}[{i}] has non-finite entries")
        if not np.all(np.isfinite(self.sap_to_irs)):
            raise ValueError("sap_to_irs has non-finite entries")

    def content_hash(self) -> str:
        """Deterministic digest of every matrix; used to verify paired trials."""
        digest = hashlib.sha256()
        for h in (*self.sap_to_pu, *self.sap_to_su, self.sap_to_irs,
                  *self.irs_to_pu, *self.irs_to_su):
            digest.update(np.ascontiguousarray(h).tobytes())
            digest.update(repr(h.shape).encode())
        return digest.hexdigest()[:16]

    def without_irs(self) -> "ChannelSet":
        """Copy with zero reflecting elements (direct links only)."""
        n_sa = self.sap_antennas
        return ChannelSet(
            sap_to_pu=self.sap_to_pu,
            sap_to_su=self.sap_to_su,
            sap_to_irs=np.zeros((0, n_sa), dtype=complex),
            irs_to_pu=tuple(np.zeros((h.shape[0], 0), dtype=complex) for h in self.irs_to_pu),
            irs_to_su=tuple(np.zeros((h.shape[0], 0), dtype=complex) for h in self.irs_to_su),
        )


def path_loss_linear(dist: float, alpha: float, ref_loss_db: float, ref_dist: float = 1.0) -> float:
    """Linear-scale power gain at ``dist`` meters.

    10^((ref_loss_db - 10 * alpha * log10(dist / ref_dist)) / 10)
    """
    if dist <= 0:
        raise ValueError(f"distance must be > 0 m (got {dist})")
    return 10.0 ** ((ref_loss_db - 10.0 * alpha * math.log10(dist / ref_dist)) / 10.0)


def steering_vector(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, unit-modulus entries."""
    k = np.arange(n)
    return np.exp(1j * np.pi * k * math.sin(angle))


def los_matrix(rows: int, cols: int, rx_pos, tx_pos) -> np.ndarray:
    """Deterministic line-of-sight component: rank-1 outer product of steering vectors.

    Angles derive from the node displacement (atan2), so the matrix is a fixed
    function of the geometry.  Entries are unit modulus.
    """
    dx = float(rx_pos[0]) - float(tx_pos[0])
    dy = float(rx_pos[1]) - float(tx_pos[1])
    aod = math.atan2(dy, dx)        # departure angle at the transmitter
    aoa = math.atan2(-dy, -dx)      # arrival angle at the receiver
    return np.outer(steering_vector(rows, aoa), steering_vector(cols, aod).conj())


def sample_rician(rows: int, cols: int, kappa: float, beta: float, rng, los=None) -> np.ndarray:
    """Draw H = sqrt(beta / (kappa + 1)) * (sqrt(kappa) * H_los + H_nlos).

    ``H_nlos`` has i.i.d. circularly-symmetric complex Gaussian entries of unit
    variance; ``los`` defaults to the all-ones matrix (any fixed unit-modulus
    rank-1 matrix fits the model).
    """
    if kappa < 0:
        raise ValueError(f"Rician factor must be >= 0 (got {kappa})")
    if beta <= 0:
        raise ValueError(f"linear path gain must be > 0 (got {beta})")
    if los is None:
        los = np.ones((rows, cols), dtype=complex)
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    return np.sqrt(beta / (kappa + 1.0)) * (np.sqrt(kappa) * los + nlos)


def _uniform_disk(center, radius: float, count: int, rng) -> np.ndarray:
    r = radius * np.sqrt(rng.random(count))
    phi = 2.0 * np.pi * rng.random(count)
    return np.stack([center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)], axis=1)


def generate_scenario(cfg: ScenarioConfig) -> ChannelSet:
    """Sample node positions and all channel matrices for one scenario.

    Deterministic given ``cfg.seed``.  Each link family consumes its own
    child RNG stream, so e.g. direct-link draws do not depend on the number
    of reflecting elements.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(6)
    rng_pos, rng_spu, rng_ssu, rng_sirs, rng_ipu, rng_isu = (np.random.default_rng(c) for c in children)

    pu_pos = _uniform_disk(cfg.pu_cluster_center, cfg.pu_cluster_radius, cfg.num_pus, rng_pos)
    su_pos = _uniform_disk(cfg.su_cluster_center, cfg.su_cluster_radius, cfg.num_sus, rng_pos)
    sap = np.asarray(cfg.sap_position, dtype=float)
    irs = np.asarray(cfg.irs_position, dtype=float)

    kap = cfg.rician_factors
    alp = cfg.path_loss_exponents

    def link(rows, cols, tx_pos, rx_pos, cls, rng):
        dist = float(np.linalg.norm(np.asarray(rx_pos, float) - np.asarray(tx_pos, float)))
        beta = path_loss_linear(dist, alp[cls], cfg.ref_loss_db)
        return sample_rician(rows, cols, kap[cls], beta, rng,
                             los=los_matrix(rows, cols, rx_pos, tx_pos))

    m, n_sa = cfg.num_elements, cfg.sap_antennas
    sap_to_pu = tuple(link(cfg.pu_antennas, n_sa, sap, pu_pos[k], "sap_pu", rng_spu)
                      for k in range(cfg.num_pus))
    sap_to_su = tuple(link(cfg.su_antennas, n_sa, sap, su_pos[l], "sap_su", rng_ssu)
                      for l in range(cfg.num_sus))
    if m > 0:
        sap_to_irs = link(m, n_sa, sap, irs, "sap_irs", rng_sirs)
        irs_to_pu = tuple(link(cfg.pu_antennas, m, irs, pu_pos[k], "irs_pu", rng_ipu)
                          for k in range(cfg.num_pus))
        irs_to_su = tuple(link(cfg.su_antennas, m, irs, su_pos[l], "irs_su", rng_isu)
                          for l in range(cfg.num_sus))
    else:
        sap_to_irs = np.zeros((0, n_sa), dtype=complex)
        irs_to_pu = tuple(np.zeros((cfg.pu_antennas, 0), dtype=complex) for _ in range(cfg.num_pus))
        irs_to_su = tuple(np.zeros((cfg.su_antennas, 0), dtype=complex) for _ in range(cfg.num_sus))

    channels = ChannelSet(sap_to_pu, sap_to_su, sap_to_irs, irs_to_pu, irs_to_su)
    channels.validate()
    return channels


def paper_default_config(**overrides) -> ScenarioConfig:
    """The default evaluation scenario (three PUs / three SUs unless overridden)."""
    return ScenarioConfig().replace(**overrides) if overrides else ScenarioConfig()


def single_pu_config(**overrides) -> ScenarioConfig:
    """Single-PU variant of the default scenario (PU at the cluster center)."""
    base = dict(num_pus=1, interference_caps_w=(2e-4,), pu_cluster_radius=0.0)
    base.update(overrides)
    return ScenarioConfig().replace(**base)
