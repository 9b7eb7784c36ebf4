"""Correctness harness: histories, linearizability checking, phase oracle, probes, schedule exploration."""

from .checker import CheckResult, SearchExhausted, brute_force_linearizable, check_linearizable
from .explore import BudgetExceeded, ExploreConfig, ExploreReport, explore_schedules
from .history import HistoryEvent, MalformedHistory, dumps, load, loads, save
from .models import ReferenceModel, model_for
from .oracle import PhaseRecorder, PhaseTrace, replay_phase_oracle
from .probes import ProbeObserver
from .record import Recording, Workload, random_programs, record_history
from .stepper import StepSystem, random_chooser, run_schedule, scripted_chooser

__all__ = [
    "CheckResult", "SearchExhausted", "brute_force_linearizable", "check_linearizable",
    "BudgetExceeded", "ExploreConfig", "ExploreReport", "explore_schedules",
    "HistoryEvent", "MalformedHistory", "dumps", "load", "loads", "save",
    "ReferenceModel", "model_for",
    "PhaseRecorder", "PhaseTrace", "replay_phase_oracle",
    "ProbeObserver",
    "Recording", "Workload", "random_programs", "record_history",
    "StepSystem", "random_chooser", "run_schedule", "scripted_chooser",
]
