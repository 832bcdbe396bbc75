"""Synchronous single-path DS-CDMA downlink: R = G B + N.

Every user is spread by a unit-norm Gold signature, so one chip of one
user's contribution carries power ``1/C``. ``snr_db`` is the ratio of that
per-user chip power to the noise variance per chip; after despreading the
correlator output SNR is ``C`` times larger.

Random draws come from per-(seed, stream, row) generators, so output never
depends on generation order.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .codes import GoldCodeSet, gold_family
from .ica import IcaConfig

NOISE_KINDS = ("awgn", "pink")
_SYMBOL_STREAM = 0
_NOISE_STREAM = 1


@dataclass(frozen=True)
class LinkScenario:
    users: int = 30
    chips: int = 31
    symbols: int = 5000
    snr_db: float = -5.0
    noise: str = "awgn"
    algorithm: IcaConfig = field(default_factory=IcaConfig)
    seed: int = 0
    # user k is spread by family code first_code + k
    first_code: int = 0

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.chips == 31 and self.users > 30:
            raise ValueError("at most 30 users fit on 31 chips (one dimension is left to noise)")
        if self.symbols < 100:
            raise ValueError("symbols must be >= 100")
        if not math.isfinite(self.snr_db) and self.snr_db != math.inf:
            raise ValueError("snr_db must be finite (or +inf for a noise-free link)")
        if self.first_code < 0:
            raise ValueError("first_code must be >= 0")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}, got {self.noise!r}")


@dataclass
class TransmittedFrame:
    symbols: np.ndarray
    mixing: np.ndarray
    received: np.ndarray
    noise_realization: np.ndarray

    @property
    def clean(self):
        return self.mixing @ self.symbols


def _rng(seed, stream, row):
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(stream, row)))


def generate_symbols(users, symbols, seed):
    """Equiprobable +/-1 BPSK symbols, shape ``(users, symbols)``."""
    if users < 1 or symbols < 1:
        raise ValueError("users and symbols must be >= 1")
    out = np.empty((users, symbols))
    for k in range(users):
        bits = _rng(seed, _SYMBOL_STREAM, k).integers(0, 2, size=symbols)
        out[k] = 1.0 - 2.0 * bits
    return out


def spread_and_mix(symbols, codes, first_code=0):
    """Return ``(mixing, clean)`` with unit-norm code columns and ``clean = mixing @ symbols``."""
    symbols = np.atleast_2d(np.asarray(symbols, dtype=float))
    users = symbols.shape[0]
    if first_code + users > len(codes):
        raise ValueError(f"{users} users from code {first_code} but only {len(codes)} codes available")
    mixing = codes.signatures(users, first_code)
    return mixing, mixing @ symbols


def noise_variance(snr_db, signal_power_per_user):
    """Per-chip noise variance for a per-user chip SNR of ``snr_db``."""
    if snr_db == math.inf:
        return 0.0
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return signal_power_per_user / 10.0 ** (snr_db / 10.0)


def awgn(shape, snr_db, signal_power_per_user, seed):
    """I.i.d. zero-mean Gaussian noise with variance set by ``snr_db``."""
    rows, cols = shape
    sigma = math.sqrt(noise_variance(snr_db, signal_power_per_user))
    out = np.empty((rows, cols))
    for r in range(rows):
        out[r] = _rng(seed, _NOISE_STREAM, r).standard_normal(cols)
    return out * sigma


def pink_noise(shape, snr_db, signal_power_per_user, seed):
    """Rows of 1/f noise scaled jointly to the AWGN-equivalent total power.

    Each row is white Gaussian noise whose spectrum is multiplied by
    ``1/sqrt(f)`` for ``f >= 1`` with the DC bin zeroed, then transformed
    back. The whole matrix is then scaled so its mean power is exactly the
    target variance.
    """
    rows, cols = shape
    var = noise_variance(snr_db, signal_power_per_user)
    out = np.empty((rows, cols))
    freq = np.arange(cols // 2 + 1, dtype=float)
    shaping = np.zeros_like(freq)
    shaping[1:] = 1.0 / np.sqrt(freq[1:])
    for r in range(rows):
        white = _rng(seed, _NOISE_STREAM, r).standard_normal(cols)
        out[r] = np.fft.irfft(np.fft.rfft(white) * shaping, n=cols)
    power = float(np.mean(out * out))
    if var == 0.0 or power == 0.0:
        return np.zeros((rows, cols))
    return out * math.sqrt(var / power)


def synthesize(sc, codes=None):
    """Draw one frame for scenario ``sc``."""
    codes = codes if codes is not None else gold_family()
    if sc.chips != codes.length:
        raise ValueError(f"scenario uses {sc.chips} chips but codes have length {codes.length}")
    b = generate_symbols(sc.users, sc.symbols, sc.seed)
    mixing, clean = spread_and_mix(b, codes, sc.first_code)
    power = 1.0 / sc.chips
    shape = (sc.chips, sc.symbols)
    if sc.noise == "awgn":
        n = awgn(shape, sc.snr_db, power, sc.seed)
    else:
        n = pink_noise(shape, sc.snr_db, power, sc.seed)
    return TransmittedFrame(b, mixing, clean + n, n)


def chip_snr_db(ebn0_db, chips=31):
    """Per-user chip SNR (``snr_db`` of a scenario) giving per-symbol ``Eb/N0 = ebn0_db``.

    With unit symbol energy and noise variance ``sigma^2`` per chip,
    ``Eb/N0 = 1 / (2 sigma^2) = (chips / 2) * chip SNR``, so matched-filter
    BPSK reaches the textbook ``Q(sqrt(2 Eb/N0))``.
    """
    return ebn0_db - 10.0 * math.log10(chips / 2.0)


def q_function(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def bpsk_ser(ebn0_db):
    """Analytic BPSK error rate ``Q(sqrt(2 Eb/N0))``."""
    g = 10.0 ** (ebn0_db / 10.0)
    return q_function(math.sqrt(2.0 * g))
