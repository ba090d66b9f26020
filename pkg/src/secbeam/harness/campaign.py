"""Monte Carlo campaigns over a scenario and deterministic CSV export."""

from __future__ import annotations

import csv
import hashlib
import io
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ..detection import aoa_passes
from ..errors import NoLinkError, SecBeamError
from ..protocol.outcome import AuthFailed, PathLossTestFailed, SweepOutcome
from ..protocol.runs import SecBeamParams, run_authenticated_sls, run_secbeam, run_sls
from .scenario import Scenario


def trial_seed(campaign_seed: int, index: int) -> int:
    """Keyed hash of the trial index; order-independent and reproducible."""
    h = hashlib.blake2b(index.to_bytes(8, "big"), key=campaign_seed.to_bytes(8, "big"), digest_size=8)
    return int.from_bytes(h.digest(), "big")


@dataclass
class TrialRecord:
    """One protocol run flattened to scalars (one CSV row, or half of one)."""

    verdict: str = ""
    verdict_detail: str = ""
    best_initiator_sector: int | None = None
    best_responder_sector: int | None = None
    selected_path_kind: str = ""
    i_max_aoa_count: int = 0
    i_max_aoa_pattern: int | None = None
    r_max_aoa_count: int = 0
    r_max_aoa_pattern: int | None = None
    i_n_sectors: int = 0
    r_n_sectors: int = 0
    i_decodable_r1: int = 0
    r_decodable_r1: int = 0
    pl_passed: bool = True
    auth_passed: bool = True
    pl_compared: int = 0
    pl_alarms: int = 0
    i_heard: int = 0
    r_heard: int = 0
    error: str = ""

    @classmethod
    def from_outcome(cls, out: SweepOutcome, epsilon: float) -> "TrialRecord":
        i, r = out.initiator_sweep, out.responder_sweep
        compared = alarms = 0
        for rec in (i, r):
            for s, pl2 in rec.pl_round2.items():
                compared += 1
                if s not in rec.pl_round1 or abs(rec.pl_round1[s] - pl2) > epsilon:
                    alarms += 1
        return cls(
            verdict=out.verdict.label, verdict_detail=_detail(out.verdict),
            best_initiator_sector=out.best_initiator_sector, best_responder_sector=out.best_responder_sector,
            selected_path_kind=out.selected_path_kind or "",
            i_max_aoa_count=i.max_aoa_count, i_max_aoa_pattern=i.max_aoa_pattern,
            r_max_aoa_count=r.max_aoa_count, r_max_aoa_pattern=r.max_aoa_pattern,
            i_n_sectors=i.n_sectors, r_n_sectors=r.n_sectors,
            i_decodable_r1=len(i.pl_round1), r_decodable_r1=len(r.pl_round1),
            pl_passed=not any(isinstance(f, PathLossTestFailed) for f in out.failures),
            auth_passed=not any(isinstance(f, AuthFailed) for f in out.failures),
            pl_compared=compared, pl_alarms=alarms,
            i_heard=i.heard_by_adversary, r_heard=r.heard_by_adversary)

    def aoa_pass(self, beta: float) -> tuple[bool, bool]:
        if self.error or not self.i_n_sectors:
            return False, False
        return (aoa_passes(self.i_max_aoa_count, self.i_n_sectors, beta),
                aoa_passes(self.r_max_aoa_count, self.r_n_sectors, beta))


def _detail(verdict) -> str:
    d = {k: v for k, v in asdict(verdict).items()}
    return ";".join(f"{k}={_fmt(getattr(v, 'value', v))}" for k, v in sorted(d.items()))


@dataclass
class Trial:
    index: int
    seed: int
    attack: TrialRecord
    benign: TrialRecord | None = None


@dataclass
class CampaignResult:
    scenario: str
    protocol: str
    beta: float
    epsilon: float
    has_adversary: bool
    trials: list[Trial] = field(default_factory=list)
    outcomes: list[SweepOutcome | None] = field(default_factory=list, repr=False)

    def benign_rows(self) -> list[TrialRecord]:
        if not self.has_adversary:
            return [t.attack for t in self.trials]
        return [t.benign for t in self.trials if t.benign is not None]

    def adversary_rows(self) -> list[TrialRecord]:
        return [t.attack for t in self.trials] if self.has_adversary else []

    def aggregates(self, beta: float | None = None) -> dict[str, float | int | str]:
        return aggregate(self, self.beta if beta is None else beta)


def _rate(flags: Sequence[bool]) -> float:
    return float(np.mean(flags)) if len(flags) else float("nan")


def aggregate(r: CampaignResult, beta: float) -> dict[str, float | int | str]:
    """Summary statistics; every value is recomputable from the trial rows."""
    benign = [b for b in r.benign_rows() if not b.error]
    attack = [a for a in r.adversary_rows() if not a.error]
    b_pass = [b.aoa_pass(beta) for b in benign]
    a_pass = [a.aoa_pass(beta) for a in attack]
    rows = [t.attack for t in r.trials]
    out: dict[str, float | int | str] = {
        "trials": len(r.trials),
        "errors": sum(1 for t in r.trials if t.attack.error or (t.benign is not None and t.benign.error)),
        "beta": beta,
        "P_I": _rate([p[0] for p in b_pass]),
        "P_R": _rate([p[1] for p in b_pass]),
        "P_FA": _rate([p[0] and p[1] for p in a_pass]),
        "accepted_rate": _rate([t.verdict == "Accepted" for t in rows if not t.error]),
        "detect_rate_path_loss": _rate([not a.pl_passed for a in attack]),
        "detect_rate_aoa": _rate([not (p[0] and p[1]) for p in a_pass]),
        "detect_rate_auth": _rate([not a.auth_passed for a in attack]),
        "detect_rate_any": _rate([a.verdict != "Accepted" for a in attack]),
        "benign_pl_sector_trials": sum(b.pl_compared for b in benign),
        "benign_pl_false_alarm_rate": (sum(b.pl_alarms for b in benign) / sum(b.pl_compared for b in benign))
        if sum(b.pl_compared for b in benign) else float("nan"),
        "benign_max_aoa_count": max((max(b.i_max_aoa_count, b.r_max_aoa_count) for b in benign), default=0),
        "attack_max_aoa_count": max((max(a.i_max_aoa_count, a.r_max_aoa_count) for a in attack), default=0),
        "relayed_selection_rate": _rate([a.selected_path_kind == "relayed" for a in attack]),
        "hist_best_initiator_sector": _hist(t.best_initiator_sector for t in rows if not t.error),
        "hist_best_responder_sector": _hist(t.best_responder_sector for t in rows if not t.error),
    }
    return out


def _hist(values) -> str:
    c = Counter(v for v in values if v is not None)
    return " ".join(f"{k}:{c[k]}" for k in sorted(c))


def _run_once(s: Scenario, adversary, rng: np.random.Generator) -> SweepOutcome:
    env, ini, res = s.environment, s.initiator, s.responder
    if s.protocol == "sls":
        return run_sls(env, ini, res, adversary, rng)
    if s.protocol == "auth_sls":
        return run_authenticated_sls(env, ini, res, adversary, rng, secret=s.params.secret,
                                     l_alpha=s.params.l_alpha)
    p = SecBeamParams(s.params.epsilon, s.params.beta, s.params.l_alpha, s.params.secret)
    return run_secbeam(env, ini, res, adversary, p, rng)


def _record(s: Scenario, adversary, seed: int, keep: list | None) -> TrialRecord:
    try:
        out = _run_once(s, adversary, np.random.default_rng(seed))
    except (NoLinkError, SecBeamError) as exc:
        if keep is not None:
            keep.append(None)
        return TrialRecord(verdict="Error", error=f"{type(exc).__name__}: {exc}")
    if keep is not None:
        keep.append(out)
    return TrialRecord.from_outcome(out, s.params.epsilon)


def run_trial(s: Scenario, index: int, keep: list | None = None) -> Trial:
    seed = trial_seed(s.params.seed, index)
    attack = _record(s, s.adversary, seed, keep)
    benign = None
    if s.adversary is not None and s.params.benign_twin:
        benign = _record(s, None, seed, None)
    return Trial(index, seed, attack, benign)


def run_campaign(s: Scenario, keep_outcomes: bool = False) -> CampaignResult:
    """Run ``s.trials`` independent trials; failures are recorded, not raised."""
    result = CampaignResult(s.name, s.protocol, s.params.beta, s.params.epsilon, s.adversary is not None)
    keep = [] if keep_outcomes else None
    for k in range(s.trials):
        result.trials.append(run_trial(s, k, keep))
    if keep is not None:
        result.outcomes = keep
    return result


@dataclass(frozen=True)
class BetaRow:
    beta: float
    p_i: float
    p_r: float
    p_fa: float


def beta_sweep(s: Scenario, betas: Sequence[float], result: CampaignResult | None = None) -> list[BetaRow]:
    """Passing rates versus beta.

    The AoA verdict depends on beta only through a threshold on recorded
    counts, so one campaign re-thresholded is the same as one campaign per
    beta with shared seeds.
    """
    for b in betas:
        if not 0 < b <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {b}")
    result = result if result is not None else run_campaign(s)
    rows = []
    for b in betas:
        agg = aggregate(result, b)
        rows.append(BetaRow(float(b), agg["P_I"], agg["P_R"], agg["P_FA"]))
    return rows


_FIELDS = [f.name for f in fields(TrialRecord)]


def csv_header(with_benign: bool) -> list[str]:
    head = ["trial", "seed"] + _FIELDS
    return head + [f"benign_{n}" for n in _FIELDS] if with_benign else head


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(t: Trial, with_benign: bool) -> list[str]:
    row = [str(t.index), str(t.seed)] + [_fmt(getattr(t.attack, n)) for n in _FIELDS]
    if with_benign:
        b = t.benign or TrialRecord()
        row += [_fmt(getattr(b, n)) for n in _FIELDS]
    return row


def results_csv(r: CampaignResult) -> str:
    with_benign = any(t.benign is not None for t in r.trials)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(csv_header(with_benign))
    for t in sorted(r.trials, key=lambda t: t.index):
        w.writerow(_row(t, with_benign))
    if r.trials:
        for k, v in aggregate(r, r.beta).items():
            w.writerow(["#", k, _fmt(v)])
    return buf.getvalue()


def export_results(r: CampaignResult, path: str | Path, format: str = "csv") -> Path:
    """Header, one row per trial, then ``#,name,value`` aggregate rows."""
    if format != "csv":
        raise ValueError(f"unsupported export format {format!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(results_csv(r))
    return path


def read_results(path: str | Path) -> tuple[list[dict[str, str]], dict[str, str]]:
    """Parse an exported CSV back into trial rows and footer aggregates."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None) or []
        rows, footer = [], {}
        for line in reader:
            if line and line[0] == "#":
                footer[line[1]] = line[2]
            else:
                rows.append(dict(zip(header, line)))
    return rows, footer
