import math
from dataclasses import replace

import numpy as np
import pytest

from secbeam.adversary import FixedAmplification
from secbeam.channel import distance
from secbeam.errors import ParseError, ValidationError
from secbeam.harness import (FIXTURES, beta_sweep, dump_scenario, export_results, fixture_path,
                             load_scenario, parse_scenario, read_results, resolve_scenario,
                             results_csv, run_campaign, save_scenario, trial_seed, validate)
from secbeam.harness.campaign import CampaignResult, csv_header
from secbeam.harness.cli import main


def test_scenario1_fixture():
    s = load_scenario(fixture_path("scenario1"))
    xs = [v[0] for v in s.environment.room_vertices]
    ys = [v[1] for v in s.environment.room_vertices]
    assert (max(xs) - min(xs), max(ys) - min(ys)) == (5.0, 5.0)
    assert distance(s.initiator.position, s.responder.position) == pytest.approx(5.0)
    assert distance(s.adversary.position, s.responder.position) == pytest.approx(1.0)
    assert s.adversary.strategy == FixedAmplification(40.0)
    assert s.protocol == "secbeam" and s.trials == 1000


@pytest.mark.parametrize("name,room,d_mr,gain", [
    ("scenario2", (5, 5), 1.0, 50.0), ("scenario3", (5, 9), 1.0, 40.0),
    ("scenario4", (5, 5), 4.1, 70.0), ("scenario5", (9, 9), 5.4, 70.0)])
def test_other_table_fixtures(name, room, d_mr, gain):
    s = resolve_scenario(name)
    xs = [v[0] for v in s.environment.room_vertices]
    ys = [v[1] for v in s.environment.room_vertices]
    assert (max(xs) - min(xs), max(ys) - min(ys)) == room
    assert distance(s.initiator.position, s.responder.position) == pytest.approx(5.0)
    assert distance(s.adversary.position, s.responder.position) == pytest.approx(d_mr, abs=0.01)
    assert s.adversary.strategy.gain == gain


def _text(name="scenario1"):
    return fixture_path(name).read_text()


def test_beta_out_of_range_rejected():
    with pytest.raises(ValidationError) as exc:
        parse_scenario(_text().replace("beta = 0.5", "beta = 1.5"))
    assert any("beta" in p for p in exc.value.problems)


def test_every_problem_is_listed():
    text = _text().replace("beta = 0.5", "beta = 0.0").replace("trials = 1000", "trials = 0")
    with pytest.raises(ValidationError) as exc:
        parse_scenario(text)
    assert len(exc.value.problems) >= 2


def test_unknown_key_reports_line():
    text = _text().replace("l_alpha = 8", "l_alpha = 8\nwobble = 3")
    with pytest.raises(ParseError) as exc:
        parse_scenario(text)
    expected_line = text.splitlines().index("wobble = 3") + 1
    assert exc.value.line == expected_line
    assert "wobble" in str(exc.value)


def test_wrong_type_and_bad_syntax():
    with pytest.raises(ParseError):
        parse_scenario(_text().replace("trials = 1000", 'trials = "many"'))
    with pytest.raises(ParseError) as exc:
        parse_scenario(_text().replace("beta = 0.5", "beta = = 0.5"))
    assert exc.value.line is not None


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip(name, tmp_path):
    s = resolve_scenario(name)
    path = tmp_path / "s.toml"
    save_scenario(s, path)
    assert load_scenario(path) == s
    assert parse_scenario(dump_scenario(s)) == s


def test_round_trip_odd_angles():
    s = resolve_scenario("scenario1")
    ant = replace(s.initiator.antenna, boresight_offset=0.123456789)
    s = replace(s, initiator=replace(s.initiator, antenna=ant))
    assert parse_scenario(dump_scenario(s)) == s


def test_overrides_and_validate():
    s = resolve_scenario("scenario1").with_overrides(trials=3, seed=9, beta=0.25)
    assert (s.trials, s.params.seed, s.params.beta) == (3, 9, 0.25)
    with pytest.raises(ValidationError):
        validate(s.with_overrides(epsilon=-1.0))
    assert s.benign().adversary is None


def test_trial_seed_is_keyed_and_stable():
    seeds = [trial_seed(101, k) for k in range(100)]
    assert len(set(seeds)) == 100
    assert trial_seed(101, 5) == seeds[5]
    assert trial_seed(102, 5) != seeds[5]


@pytest.fixture(scope="module")
def small_campaign():
    s = resolve_scenario("scenario1").with_overrides(trials=8)
    return s, run_campaign(s)


def test_campaign_is_deterministic(small_campaign):
    s, r = small_campaign
    assert results_csv(run_campaign(s)) == results_csv(r)
    one = s.with_overrides(trials=1)
    assert run_campaign(one).trials == run_campaign(one).trials


def test_csv_layout(small_campaign, tmp_path):
    s, r = small_campaign
    path = export_results(r, tmp_path / "out" / "r.csv")
    raw = path.read_bytes()
    assert raw.endswith(b"\r\n") and b"\r\n" in raw
    rows, footer = read_results(path)
    assert len(rows) == 8
    assert list(rows[0]) == csv_header(True)
    assert export_results(r, tmp_path / "again.csv").read_bytes() == raw
    # the footer is derivable from the rows
    benign_pass = [(row["benign_i_max_aoa_count"], row["benign_i_n_sectors"]) for row in rows]
    p_i = np.mean([int(c) <= 0.5 * int(n) for c, n in benign_pass])
    assert float(footer["P_I"]) == pytest.approx(p_i)
    attack_detected = np.mean([row["verdict"] != "Accepted" for row in rows])
    assert float(footer["detect_rate_any"]) == pytest.approx(attack_detected)
    with pytest.raises(ValueError):
        export_results(r, tmp_path / "x.json", format="json")


def test_empty_campaign_is_header_only(tmp_path):
    r = CampaignResult("empty", "secbeam", 0.5, 6.6, False)
    path = export_results(r, tmp_path / "e.csv")
    assert path.read_bytes() == (",".join(csv_header(False)) + "\r\n").encode()


def test_beta_sweep(small_campaign):
    s, r = small_campaign
    rows = beta_sweep(s, [0.1, 0.3, 0.5, 0.7, 1.0], r)
    for a, b in zip(rows, rows[1:]):
        assert b.p_i >= a.p_i and b.p_fa >= a.p_fa
    assert rows[-1].p_fa == 1.0
    at_half = rows[2]
    assert (at_half.p_i, at_half.p_fa) == (1.0, 0.0)
    with pytest.raises(ValueError):
        beta_sweep(s, [1.5], r)


def test_errors_are_recorded_not_raised():
    s = resolve_scenario("scenario1").with_overrides(trials=2)
    deaf = replace(s, responder=replace(s.responder, snr_min=300.0)).benign()
    r = run_campaign(deaf)
    assert all(t.attack.error.startswith("NoLinkError") for t in r.trials)
    assert r.aggregates()["errors"] == 2


def test_cli_analyze(capsys):
    assert main(["analyze", "duration"]) == 0
    assert capsys.readouterr().out.strip() == "2.071200 ms"
    assert main(["analyze", "epsilon", "--sigma", "1.8", "--confidence", "0.99"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(6.557, abs=1e-3)
    assert main(["analyze", "prob-bs", "--nm", "21", "--k", "19", "--x", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(361 / 194481, rel=1e-9)


def test_cli_run_and_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SECBEAM_OUTPUT_DIR", str(tmp_path))
    assert main(["run", "scenario1", "--trials", "2", "--seed", "5"]) == 0
    rows, footer = read_results(tmp_path / "scenario1.csv")
    assert len(rows) == 2 and rows[0]["seed"] == str(trial_seed(5, 0))
    bad = tmp_path / "bad.toml"
    bad.write_text(_text().replace("beta = 0.5", "beta = 1.5"))
    assert main(["run", str(bad)]) == 2
    assert main(["run", "scenario1", "--beta", "2.0"]) == 2
    assert main(["run", str(tmp_path / "missing.toml")]) == 3
    capsys.readouterr()
    assert main(["sweep-beta", "scenario1", "--trials", "2", "--betas", "0.5", "1.0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "beta,P_I,P_R,P_FA" and len(out) == 3
    assert (tmp_path / "scenario1_beta_sweep.csv").exists()


def test_cli_demo(tmp_path):
    assert main(["demo", "attack", "lab_attack", "--output-dir", str(tmp_path)]) == 0
    rows, footer = read_results(tmp_path / "lab_attack_initiator_sweep.csv")
    assert len(rows) == 12
    assert footer["attack_selected_path"] == "relayed"
    assert (tmp_path / "lab_attack_responder_sweep.csv").exists()
    assert not math.isnan(float(rows[0]["benign_snr_r1_db"]))
