"""Superflows: hypothesis-driven aggregation of flow records."""

from .decompose import (
    Decomposition, Superflow, brute_force_decompose, decompose, verify_maximal,
)
from .errors import SuperflowError
from .flows import FlowRecord, decode_compact, encode_compact, parse_flow_csv, read_flow_stream
from .footprint import FootprintReport, flow_footprint, footprint_report, web_superflow_size
from .hypothesis import (
    builtin_chat, builtin_scan, builtin_web, classify, evaluate, parse_hypothesis, pretty_print,
)
from .monitor import MonitorState, Offer, monitor_new, monitor_offer, monitor_qualified
from .scenarios import ScenarioSpec, generate_scenario

__version__ = "0.1.0"
