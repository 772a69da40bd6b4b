"""Multipath Rayleigh channel, Gaussian-mixture noise, and receive-window assembly.

The receiver's capture is modelled as a slice of one conceptually infinite
stream: pure noise before the transmitter starts, then the superposition of
per-antenna tap convolutions plus noise. A timing offset ``d`` only moves the
slice start, so windows taken at different offsets from the same seed are
bit-exact shifts of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import ConfigError, SystemConfig, generate_block

# purpose tags for deriving independent substreams from one trial seed
STREAM_SIGNAL = 1
STREAM_CHANNEL = 2
STREAM_NOISE = 3
STREAM_DELAY = 4
STREAM_PDP_ERROR = 5


def substream(*entropy: int) -> np.random.Generator:
    """Independent generator derived from an entropy path.

    Streams for distinct paths are statistically independent and do not
    depend on evaluation order, so parallel trial workers can derive their
    own draws from (master_seed, trial_index, purpose, ...) tuples.
    """
    return np.random.default_rng(np.random.SeedSequence(list(entropy)))


@dataclass(frozen=True)
class DelayProfile:
    """Average tap powers of the multipath channel."""

    powers: np.ndarray

    def __post_init__(self) -> None:
        powers = np.asarray(self.powers, dtype=float)
        powers.setflags(write=False)
        object.__setattr__(self, "powers", powers)
        if powers.ndim != 1 or powers.size == 0:
            raise ConfigError("delay profile must be a non-empty 1-D vector")
        if np.any(powers < 0) or not np.any(powers > 0):
            raise ConfigError("tap powers must be >= 0 with at least one > 0")

    @classmethod
    def exponential(
        cls, scale: float, decay: float, n_taps: int, normalized: bool = False
    ) -> "DelayProfile":
        """Exponentially decaying profile scale * exp(-decay * k).

        With ``normalized=True`` the powers are rescaled to sum to exactly 1.
        """
        powers = scale * np.exp(-decay * np.arange(n_taps, dtype=float))
        if normalized:
            powers = powers / powers.sum()
        return cls(powers)

    @property
    def n_taps(self) -> int:
        return int(self.powers.size)

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())

    def perturbed(self, alpha: float, signs: np.ndarray) -> "DelayProfile":
        """Profile with per-tap power errors (1 + signs[k] * alpha) * powers[k]."""
        if not 0 <= alpha < 1:
            raise ConfigError("perturbation alpha must lie in [0, 1)")
        return DelayProfile(self.powers * (1.0 + alpha * np.asarray(signs, dtype=float)))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One quasi-static draw of all tap gains: shape (n_rx, n_tx, n_taps)."""

    taps: np.ndarray


@dataclass(frozen=True)
class NoiseMixture:
    """Zero-mean complex Gaussian mixture (Class A style impulsive noise).

    ``probs[l]`` selects a component per sample; the selected sample is
    CN(0, variances[l]), i.e. each I/Q part has variance variances[l] / 2.
    """

    probs: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        variances = np.asarray(self.variances, dtype=float)
        probs.setflags(write=False)
        variances.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "variances", variances)
        if probs.shape != variances.shape or probs.ndim != 1 or probs.size == 0:
            raise ConfigError("mixture needs matching 1-D probs and variances")
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigError("component probabilities must be positive and sum to 1")
        if np.any(variances <= 0):
            raise ConfigError("component variances must be strictly positive")

    @classmethod
    def gaussian(cls, variance: float = 1.0) -> "NoiseMixture":
        return cls(np.array([1.0]), np.array([float(variance)]))

    @classmethod
    def impulsive(
        cls, p_nominal: float = 0.99, var_nominal: float = 1.0, var_impulse: float = 100.0
    ) -> "NoiseMixture":
        """Two-component mixture: nominal noise plus rare high-power impulses."""
        return cls(
            np.array([p_nominal, 1.0 - p_nominal]),
            np.array([float(var_nominal), float(var_impulse)]),
        )

    @property
    def n_components(self) -> int:
        return int(self.probs.size)

    @property
    def avg_power(self) -> float:
        return float(np.dot(self.probs, self.variances))


def scale_mixture_to_snr(
    mixture: NoiseMixture, signal_power: float, snr_db: float
) -> NoiseMixture:
    """Rescale all component variances by one factor so the average noise
    power equals signal_power * 10**(-snr_db / 10); weights are unchanged."""
    if not math.isfinite(snr_db):
        raise ConfigError("snr_db must be finite")
    target = signal_power * 10.0 ** (-snr_db / 10.0)
    return NoiseMixture(mixture.probs, mixture.variances * (target / mixture.avg_power))


def draw_channel(
    profile: DelayProfile, n_tx: int, n_rx: int, rng: np.random.Generator
) -> ChannelRealization:
    """Draw i.i.d. Rayleigh taps h[j, i, k] ~ CN(0, powers[k]) for every
    (receive, transmit) antenna pair."""
    shape = (n_rx, n_tx, profile.n_taps)
    taps = rng.standard_normal(shape + (2,)) @ np.array([1.0, 1.0j])
    taps *= np.sqrt(profile.powers / 2.0)
    return ChannelRealization(taps=taps)


def draw_noise(
    mixture: NoiseMixture,
    count: int,
    rng: np.random.Generator,
    return_components: bool = False,
):
    """Draw ``count`` mixture noise samples.

    Per sample a component l is selected with probability probs[l] and the
    sample is CN(0, variances[l]). With ``return_components=True`` also
    returns the selected component index per sample.
    """
    edges = np.cumsum(mixture.probs)
    which = np.searchsorted(edges, rng.random(count), side="right")
    which = np.minimum(which, mixture.n_components - 1)
    base = rng.standard_normal((count, 2)) @ np.array([1.0, 1.0j])
    samples = base * np.sqrt(mixture.variances[which] / 2.0)
    if return_components:
        return samples, which
    return samples


@dataclass(frozen=True, eq=False)
class ReceivedWindow:
    """Receiver capture of ``n_blocks * block_len`` samples per receive antenna."""

    samples: np.ndarray  # (n_rx, m) complex
    d_true: int
    config: SystemConfig
    profile: DelayProfile
    mixture: NoiseMixture
    seed: tuple[int, ...]
    channel: ChannelRealization

    @property
    def n_rx(self) -> int:
        return int(self.samples.shape[0])

    @property
    def length(self) -> int:
        return int(self.samples.shape[1])

    def dump_iq(self, path_prefix) -> list[str]:
        """Write one interleaved float64 I/Q file per receive antenna."""
        from .waveform import write_iq_f64

        paths = []
        for j in range(self.n_rx):
            path = f"{path_prefix}.rx{j}.iq"
            write_iq_f64(self.samples[j], path)
            paths.append(path)
        return paths


def convolve_frame(frame: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Channel output for one transmitted frame, truncated to the frame length.

    Equivalent to the per-block lower-triangular Toeplitz products: because
    every block ends in at least n_taps zeros, the convolution tail of each
    block dies inside its own zero pad and blocks never interfere.
    """
    return np.convolve(frame, taps)[: frame.size]


def build_stream(
    config: SystemConfig,
    profile: DelayProfile,
    mixture: NoiseMixture,
    seed: tuple[int, ...],
    d_pad: int,
    channel: ChannelRealization | None = None,
) -> tuple[np.ndarray, ChannelRealization]:
    """Materialize the receive stream for indices [-d_pad, (n_blocks+1)*block_len).

    Index 0 is the first transmitted sample; the d_pad leading samples are
    pure noise. One extra block beyond n_blocks is generated so windows
    starting anywhere up to block_len - 1 stay in support. All draws come
    from substreams of ``seed``, independent of d_pad slicing.
    """
    n_s = config.block_len
    n_gen = config.n_blocks + 1
    sig_len = n_gen * n_s

    if channel is None:
        channel = draw_channel(
            profile, config.n_tx, config.n_rx, substream(*seed, STREAM_CHANNEL)
        )
    frames = np.empty((config.n_tx, sig_len), dtype=np.complex128)
    for i in range(config.n_tx):
        for n in range(n_gen):
            block = generate_block(config, i, n, substream(*seed, STREAM_SIGNAL, i, n))
            frames[i, n * n_s : (n + 1) * n_s] = block.samples

    stream = np.empty((config.n_rx, d_pad + sig_len), dtype=np.complex128)
    for j in range(config.n_rx):
        sig = np.zeros(sig_len, dtype=np.complex128)
        for i in range(config.n_tx):
            sig += convolve_frame(frames[i], channel.taps[j, i])
        noise = np.empty(d_pad + sig_len, dtype=np.complex128)
        noise[:d_pad] = draw_noise(mixture, d_pad, substream(*seed, STREAM_NOISE, j, 0))
        for n in range(n_gen):
            noise[d_pad + n * n_s : d_pad + (n + 1) * n_s] = draw_noise(
                mixture, n_s, substream(*seed, STREAM_NOISE, j, n + 1)
            )
        stream[j] = noise
        stream[j, d_pad:] += sig
    return stream, channel


def assemble_window(
    config: SystemConfig,
    profile: DelayProfile,
    mixture: NoiseMixture,
    d_true: int,
    seed: int | tuple[int, ...],
    d_pad: int | None = None,
    channel: ChannelRealization | None = None,
) -> ReceivedWindow:
    """Build the receiver's observation window for a true timing offset.

    ``d_true`` may range over [-d_pad, block_len - 1]: negative offsets mean
    the receiver started early and captures that many leading noise samples.
    ``seed`` identifies the trial; pass ``channel`` to pin the realization
    (noise-free oracle tests).
    """
    seed_t = (seed,) if isinstance(seed, int) else tuple(seed)
    n_s = config.block_len
    if d_pad is None:
        d_pad = n_s - 1
    if d_pad < 0:
        raise ConfigError("d_pad must be >= 0")
    if not -d_pad <= d_true <= n_s - 1:
        raise ConfigError(
            f"d_true={d_true} outside supported range [{-d_pad}, {n_s - 1}]"
        )
    stream, realization = build_stream(config, profile, mixture, seed_t, d_pad, channel)
    start = d_pad + d_true
    window = stream[:, start : start + config.window_len].copy()
    return ReceivedWindow(
        samples=window,
        d_true=d_true,
        config=config,
        profile=profile,
        mixture=mixture,
        seed=seed_t,
        channel=realization,
    )
