"""Synthetic multi-environment FDD channel generator.

An environment is a fixed set of multipath clusters whose delays are drawn
once from the environment seed.  Every user in the environment shares those
cluster delays but observes its own path count, gains and phases, so the
uplink and downlink frequency responses of one user are two views of a
single shared multipath geometry while distinct users stay uncorrelated.

The per-subcarrier frequency response of a user with paths
``(gains, delays, phases)`` at carrier ``f`` is

    H(f, l) = sum_n gains[n] * exp(-j*2*pi*f*delays[n] + j*phases[n])
                            * exp(-j*2*pi*n*l / L)

i.e. each path contributes a carrier-dependent rotation of its complex gain
times a per-tap DFT factor.  Because uplink and downlink differ only in the
carrier ``f``, the two band responses are tied together by the shared path
delays, which is what makes a band-to-band feature mapping learnable.

Channel estimation is abstracted as additive white Gaussian noise on the
frequency response, scaled from a target SNR against the mean per-subcarrier
channel power.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .rng import ReusableStream, stream

DATASET_MAGIC = b"FDKG-DS"
DATASET_VERSION = 1

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OfdmConfig:
    """Carrier and subcarrier layout of the FDD-OFDM link.

    ``f_ul_hz == f_dl_hz`` is permitted: it degenerates the system into a
    perfectly reciprocal one, which several sanity checks rely on.
    """

    f_ul_hz: float = 2.4e9
    f_dl_hz: float = 2.5e9
    n_subcarriers: int = 64
    bandwidth_hz: float = 20e6

    def __post_init__(self) -> None:
        if self.n_subcarriers <= 0:
            raise ConfigError(f"n_subcarriers must be positive, got {self.n_subcarriers}")
        if self.f_ul_hz <= 0 or self.f_dl_hz <= 0:
            raise ConfigError("carrier frequencies must be positive")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be positive")

    def to_dict(self) -> dict:
        return {
            "f_ul_hz": self.f_ul_hz,
            "f_dl_hz": self.f_dl_hz,
            "n_subcarriers": self.n_subcarriers,
            "bandwidth_hz": self.bandwidth_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OfdmConfig":
        return cls(**d)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Parametric description of one propagation environment."""

    env_id: int
    n_paths_range: tuple[int, int] = (48, 64)
    delay_spread_s: float = 200e-9
    gain_decay: float = 4.0
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.n_paths_range
        if lo < 1:
            raise ConfigError(f"n_paths_range minimum must be >= 1, got {lo}")
        if lo > hi:
            raise ConfigError(f"invalid n_paths_range: min {lo} > max {hi}")
        if self.delay_spread_s <= 0:
            raise ConfigError("delay_spread_s must be positive")
        if self.gain_decay <= 0:
            raise ConfigError("gain_decay must be positive")
        # tuple-ify so configs loaded from JSON lists compare equal
        object.__setattr__(self, "n_paths_range", (int(lo), int(hi)))

    def to_dict(self) -> dict:
        return {
            "env_id": self.env_id,
            "n_paths_range": list(self.n_paths_range),
            "delay_spread_s": self.delay_spread_s,
            "gain_decay": self.gain_decay,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentSpec":
        d = dict(d)
        d["n_paths_range"] = tuple(d["n_paths_range"])
        return cls(**d)


@dataclass(frozen=True)
class PathParams:
    """Multipath description shared by the uplink and downlink bands."""

    gains: np.ndarray
    delays: np.ndarray
    phases: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.gains) == len(self.delays) == len(self.phases)):
            raise ValueError("gains, delays and phases must have equal length")
        if np.any(self.gains <= 0):
            raise ValueError("path gains must be positive")
        if np.any(self.delays < 0):
            raise ValueError("path delays must be non-negative")
        if np.any(self.phases < 0) or np.any(self.phases >= TWO_PI):
            raise ValueError("path phases must lie in [0, 2*pi)")

    @property
    def n_paths(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class Environment:
    """Immutable environment: spec plus the fixed cluster delay layout."""

    spec: EnvironmentSpec
    cluster_delays: np.ndarray  # sorted ascending, length = max path count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Environment):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(
            self.cluster_delays, other.cluster_delays
        )

    def __hash__(self) -> int:
        return hash((self.spec, self.cluster_delays.tobytes()))


@dataclass(frozen=True)
class ChannelPair:
    """One user's estimated uplink/downlink frequency responses."""

    h_ul: np.ndarray
    h_dl: np.ndarray
    snr_db: float

    def __post_init__(self) -> None:
        if self.h_ul.shape != self.h_dl.shape:
            raise ValueError("uplink and downlink responses must have equal length")
        if not (np.all(np.isfinite(self.h_ul.view(float))) and np.all(np.isfinite(self.h_dl.view(float)))):
            raise ValueError("channel responses must be finite")


def build_environment(spec: EnvironmentSpec) -> Environment:
    """Create the deterministic cluster layout for one environment.

    Equal specs produce byte-identical environments; the cluster delays are
    drawn once from the environment seed and sorted ascending.
    """
    _, hi = spec.n_paths_range
    rng = stream(spec.seed, "env-base", spec.env_id)
    delays = np.sort(rng.uniform(0.0, spec.delay_spread_s, size=hi))
    delays.setflags(write=False)
    return Environment(spec=spec, cluster_delays=delays)


def _draw_paths(env: Environment, rng: np.random.Generator) -> PathParams:
    spec = env.spec
    lo, hi = spec.n_paths_range
    n = int(rng.integers(lo, hi + 1))
    delays = env.cluster_delays[:n].copy()
    u = rng.uniform(0.5, 1.0, size=n)
    gains = np.exp(-(delays / spec.delay_spread_s) / spec.gain_decay) * u
    phases = rng.uniform(0.0, TWO_PI, size=n)
    return PathParams(gains=gains, delays=delays, phases=phases)


def sample_user_channel(env: Environment, user_index: int) -> PathParams:
    """Draw one user's multipath parameters from (env seed, user index).

    The user observes the first ``n`` cluster delays (earliest echoes), with
    ``n`` uniform over the configured path-count range.  Gains follow an
    exponential decay in normalized delay, jittered by a uniform factor in
    [0.5, 1]; phases are uniform over [0, 2*pi).
    """
    if user_index < 0:
        raise ValueError(f"user_index must be >= 0, got {user_index}")
    spec = env.spec
    return _draw_paths(env, stream(spec.seed, "user", spec.env_id, int(user_index)))


@lru_cache(maxsize=64)
def _tap_dft_block(n_paths: int, n_subcarriers: int) -> np.ndarray:
    """Per-tap DFT factors exp(-j*2*pi*n*l/L) of shape (n_paths, L)."""
    n = np.arange(n_paths)[:, None]
    l = np.arange(n_subcarriers)[None, :]
    block = np.exp(-1j * TWO_PI * n * l / n_subcarriers)
    block.setflags(write=False)
    return block


def cfr(paths: PathParams, f: float, cfg: OfdmConfig) -> np.ndarray:
    """Channel frequency response at carrier ``f`` over all subcarriers."""
    if f <= 0:
        raise ValueError(f"carrier frequency must be positive, got {f}")
    coeff = paths.gains * np.exp(-1j * TWO_PI * f * paths.delays + 1j * paths.phases)
    return coeff @ _tap_dft_block(paths.n_paths, cfg.n_subcarriers)


def add_estimation_noise(
    h: np.ndarray, snr_db: float, rng: np.random.Generator
) -> np.ndarray:
    """Add circularly symmetric complex Gaussian estimation noise.

    Per-element noise variance is mean(|h|^2) / 10^(snr_db/10); an infinite
    SNR disables the noise entirely.  Alice and Bob must pass independent
    generators so their estimation errors are independent.
    """
    if not np.all(np.isfinite(h.view(float))):
        raise ValueError("channel response must be finite")
    if math.isinf(snr_db):
        return h.copy()
    power = float(np.mean(np.abs(h) ** 2))
    var = power / 10.0 ** (snr_db / 10.0)
    scale = math.sqrt(var / 2.0)
    noise = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    return h + scale * noise


@dataclass(frozen=True)
class EnvironmentDataset:
    """Uplink/downlink estimated CFR pairs for one environment.

    Row i of ``h_ul`` and ``h_dl`` derive from the same user's path
    parameters; the two bands carry independent estimation noise.
    """

    spec: EnvironmentSpec
    ofdm: OfdmConfig
    snr_db: float
    h_ul: np.ndarray  # (n_samples, L) complex128
    h_dl: np.ndarray

    def __post_init__(self) -> None:
        if self.h_ul.shape != self.h_dl.shape:
            raise ValueError("uplink/downlink arrays must have equal shape")
        if self.h_ul.ndim != 2 or self.h_ul.shape[1] != self.ofdm.n_subcarriers:
            raise ValueError("dataset arrays must be (n_samples, n_subcarriers)")

    @property
    def n_samples(self) -> int:
        return self.h_ul.shape[0]

    def pair(self, i: int) -> ChannelPair:
        return ChannelPair(h_ul=self.h_ul[i], h_dl=self.h_dl[i], snr_db=self.snr_db)

    def subset(self, indices: np.ndarray | list[int] | slice) -> "EnvironmentDataset":
        return EnvironmentDataset(
            spec=self.spec,
            ofdm=self.ofdm,
            snr_db=self.snr_db,
            h_ul=self.h_ul[indices],
            h_dl=self.h_dl[indices],
        )


def _snr_tag(snr_db: float) -> float:
    # inf cannot be packed into a stream tag meaningfully distinct per run,
    # but no noise stream is consumed at infinite SNR anyway
    return 0.0 if math.isinf(snr_db) else float(snr_db)


def generate_sample(
    env: Environment, user_index: int, snr_db: float, cfg: OfdmConfig
) -> ChannelPair:
    """Generate one user's noisy band pair; independent of all other samples."""
    paths = sample_user_channel(env, user_index)
    h_ul = cfr(paths, cfg.f_ul_hz, cfg)
    h_dl = cfr(paths, cfg.f_dl_hz, cfg)
    if not math.isinf(snr_db):
        seed = env.spec.seed
        tag = _snr_tag(snr_db)
        rng_ul = stream(seed, "noise-ul", env.spec.env_id, int(user_index), tag)
        rng_dl = stream(seed, "noise-dl", env.spec.env_id, int(user_index), tag)
        h_ul = add_estimation_noise(h_ul, snr_db, rng_ul)
        h_dl = add_estimation_noise(h_dl, snr_db, rng_dl)
    return ChannelPair(h_ul=h_ul, h_dl=h_dl, snr_db=snr_db)


def generate_env_dataset(
    env: Environment,
    n_samples: int,
    snr_db: float,
    cfg: OfdmConfig,
    start_index: int = 0,
) -> EnvironmentDataset:
    """Generate ``n_samples`` band pairs for users start_index..start_index+n-1.

    Deterministic given (spec, snr_db, cfg, start_index); generating any
    sample alone (:func:`generate_sample`) yields the same values as inside
    a batch.  The batch path re-keys pooled generators instead of building
    fresh ones per sample, which produces identical draws much faster.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    L = cfg.n_subcarriers
    h_ul = np.empty((n_samples, L), dtype=np.complex128)
    h_dl = np.empty((n_samples, L), dtype=np.complex128)
    seed, env_id = env.spec.seed, env.spec.env_id
    tag = _snr_tag(snr_db)
    noisy = not math.isinf(snr_db)
    pool_user, pool_ul, pool_dl = ReusableStream(), ReusableStream(), ReusableStream()
    for i in range(n_samples):
        user = start_index + i
        paths = _draw_paths(env, pool_user.rekey(seed, "user", env_id, user))
        hu = cfr(paths, cfg.f_ul_hz, cfg)
        hd = cfr(paths, cfg.f_dl_hz, cfg)
        if noisy:
            hu = add_estimation_noise(hu, snr_db, pool_ul.rekey(seed, "noise-ul", env_id, user, tag))
            hd = add_estimation_noise(hd, snr_db, pool_dl.rekey(seed, "noise-dl", env_id, user, tag))
        h_ul[i] = hu
        h_dl[i] = hd
    return EnvironmentDataset(spec=env.spec, ofdm=cfg, snr_db=snr_db, h_ul=h_ul, h_dl=h_dl)


def write_dataset(ds: EnvironmentDataset, path: str | Path) -> None:
    """Write the binary dataset plus a JSON sidecar describing it.

    Layout: magic, version u32, L u32, n_samples u64, then per sample the
    uplink response as L little-endian (re, im) f64 pairs followed by the
    downlink response in the same encoding.
    """
    path = Path(path)
    n, L = ds.h_ul.shape
    body = np.empty((n, 4 * L), dtype="<f8")
    body[:, 0 : 2 * L : 2] = ds.h_ul.real
    body[:, 1 : 2 * L : 2] = ds.h_ul.imag
    body[:, 2 * L :: 2] = ds.h_dl.real
    body[:, 2 * L + 1 :: 2] = ds.h_dl.imag
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IIQ", DATASET_VERSION, L, n))
        fh.write(body.tobytes())
    sidecar = {
        "environment": ds.spec.to_dict(),
        "ofdm": ds.ofdm.to_dict(),
        "snr_db": None if math.isinf(ds.snr_db) else ds.snr_db,
        "n_samples": n,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_dataset(path: str | Path) -> EnvironmentDataset:
    """Read a dataset written by :func:`write_dataset` (sidecar required)."""
    path = Path(path)
    raw = path.read_bytes()
    header_len = len(DATASET_MAGIC) + 16
    if len(raw) < header_len:
        raise FormatError(f"{path}: truncated header")
    if raw[: len(DATASET_MAGIC)] != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:7]!r}")
    version, L, n = struct.unpack_from("<IIQ", raw, len(DATASET_MAGIC))
    if version != DATASET_VERSION:
        raise FormatError(f"{path}: unsupported dataset version {version}")
    expected = header_len + n * 4 * L * 8
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=header_len).reshape(n, 4 * L)
    h_ul = body[:, 0 : 2 * L : 2] + 1j * body[:, 1 : 2 * L : 2]
    h_dl = body[:, 2 * L :: 2] + 1j * body[:, 2 * L + 1 :: 2]
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    snr = sidecar["snr_db"]
    return EnvironmentDataset(
        spec=EnvironmentSpec.from_dict(sidecar["environment"]),
        ofdm=OfdmConfig.from_dict(sidecar["ofdm"]),
        snr_db=math.inf if snr is None else float(snr),
        h_ul=np.ascontiguousarray(h_ul),
        h_dl=np.ascontiguousarray(h_dl),
    )
