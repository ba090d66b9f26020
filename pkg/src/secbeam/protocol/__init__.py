"""Frames, cryptography and the alignment protocol state machines."""

from .crypto import (KeyPair, NonceSource, derive_keys, make_authenticator, open_ssf,
                     permutation_seed, permute_sectors, seal_ssf, verify_authenticator)
from .frames import Direction, Feedback, Ssf
from .outcome import (Accepted, AoaTestFailed, AuthFailed, CpdpFailed, PathLossTestFailed,
                      SweepOutcome, SweepRecord, Verdict)
from .radio import DeviceConfig, build_link, measure, pair_paths, sector_arrivals
from .runs import (PowerRange, SecBeamParams, compute_power_range, run_authenticated_sls,
                   run_secbeam, run_sls)

__all__ = [
    "Accepted", "AoaTestFailed", "AuthFailed", "CpdpFailed", "DeviceConfig", "Direction",
    "Feedback", "KeyPair", "NonceSource", "PathLossTestFailed", "PowerRange", "SecBeamParams",
    "Ssf", "SweepOutcome", "SweepRecord", "Verdict", "build_link", "compute_power_range",
    "derive_keys", "make_authenticator", "measure", "open_ssf", "pair_paths", "permutation_seed",
    "permute_sectors", "run_authenticated_sls", "run_secbeam", "run_sls", "seal_ssf",
    "sector_arrivals", "verify_authenticator",
]
