"""Per-sector SNR tables of one run with and without the adversary."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..protocol.frames import Direction
from ..protocol.outcome import SweepOutcome
from .campaign import _run_once, trial_seed
from .scenario import Scenario

COLUMNS = ["sector", "benign_snr_r1_db", "attack_snr_r1_db", "benign_pattern_r1", "attack_pattern_r1",
           "attack_relay_dominant", "benign_delta_pl_db", "attack_delta_pl_db", "attack_pattern_r2"]


def _cell(d: dict, key):
    v = d.get(key)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(float(v)) if isinstance(v, float) else str(v)


def sector_table(benign: SweepOutcome | None, attack: SweepOutcome | None, direction: Direction) -> list[list[str]]:
    def parts(out):
        if out is None:
            return {}, {}, {}, {}, {}
        rec = out.record(direction)
        delta = {s: rec.pl_round2[s] - rec.pl_round1[s] for s in rec.pl_round2 if s in rec.pl_round1}
        return rec.snr_round1, rec.best_pattern_round1, rec.relay_dominant_round1, delta, rec.best_pattern_round2

    b_snr, b_pat, _, b_delta, _ = parts(benign)
    a_snr, a_pat, a_dom, a_delta, a_pat2 = parts(attack)
    n = (benign or attack).record(direction).n_sectors
    return [[str(s), _cell(b_snr, s), _cell(a_snr, s), _cell(b_pat, s), _cell(a_pat, s), _cell(a_dom, s),
             _cell(b_delta, s), _cell(a_delta, s), _cell(a_pat2, s)] for s in range(1, n + 1)]


def demo_attack(s: Scenario, out_dir: str | Path, trial: int = 0) -> list[Path]:
    """Write ``<name>_initiator_sweep.csv`` and ``<name>_responder_sweep.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = trial_seed(s.params.seed, trial)
    benign = _run_once(s, None, np.random.default_rng(seed))
    attack = _run_once(s, s.adversary, np.random.default_rng(seed)) if s.adversary is not None else None
    paths = []
    for direction in Direction:
        p = out_dir / f"{s.name}_{direction.value}_sweep.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(COLUMNS)
            w.writerows(sector_table(benign, attack, direction))
            w.writerow(["#", "benign_verdict", benign.verdict.label])
            w.writerow(["#", "benign_pair", f"{benign.best_initiator_sector}-{benign.best_responder_sector}"])
            if attack is not None:
                w.writerow(["#", "attack_verdict", attack.verdict.label])
                w.writerow(["#", "attack_pair", f"{attack.best_initiator_sector}-{attack.best_responder_sector}"])
                w.writerow(["#", "attack_selected_path", attack.selected_path_kind or ""])
        paths.append(p)
    return paths
