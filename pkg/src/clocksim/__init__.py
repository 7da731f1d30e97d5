"""Deterministic simulation and verification of self-stabilizing
fault-tolerant clock synchronization protocols."""

from .approxagree import approx_select, select_window
from .bcast import BcastHost, BcastMessage, check_tps
from .clocks import (ApproxClocksDriver, ClockSynchDriver, CycleCSDriver,
                     cyclic_diff, is_synchronized)
from .consensus import ConsensusCore, phase_deadline, start_consensus
from .engine import NodeCtx, ProtocolViolation, Simulation
from .events import TraceEvent, read_trace, write_trace
from .faults import ByzWindow, FaultSchedule, Outage
from .fixedpoint import RESOLUTION, fmt_grid, parse_grid, to_grid
from .harness import (RunReport, Scenario, adj_bounds, analyze_trace,
                      gamma_bound, load_scenario, measure_precision,
                      run_scenario, scenario_from_dict, sweep)
from .params import ConfigError, PulseParams, TimingParams, default_timing
from .pulses import generate_pulse_schedule, verify_pulse_trace

__version__ = "0.1.0"
