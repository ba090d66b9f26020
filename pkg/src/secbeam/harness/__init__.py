"""Scenario files, Monte Carlo campaigns, CSV export and the CLI."""

from .campaign import (BetaRow, CampaignResult, TrialRecord, beta_sweep, export_results, read_results,
                       results_csv, run_campaign, run_trial, trial_seed)
from .scenario import (FIXTURES, Scenario, ScenarioParams, dump_scenario, fixture_path, load_scenario,
                       parse_scenario, resolve_scenario, save_scenario, validate)

__all__ = [
    "BetaRow", "CampaignResult", "FIXTURES", "Scenario", "ScenarioParams", "TrialRecord", "beta_sweep",
    "dump_scenario", "export_results", "fixture_path", "load_scenario", "parse_scenario", "read_results",
    "resolve_scenario", "results_csv", "run_campaign", "run_trial", "save_scenario", "trial_seed",
    "validate",
]
