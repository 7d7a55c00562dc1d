"""Executable thinging-machine models: DSL, validator, simulator, importers, DOT export."""

from .context import ContextSpec, import_context, parse_ctx
from .dsl import ParseError, SourceSpan, TMSyntaxError, parse, parse_file, serialize
from .fsm import FsmSpec, fsm_schedule, import_fsm, parse_fsm
from .model import (
    ActionKind,
    ActionNode,
    Event,
    FlowEdge,
    Guard,
    Model,
    ModelBuilder,
    Store,
    Thimac,
    TriggerEdge,
    flow_reachable,
    induced_region,
    structural_eq,
    successor_allowed,
)
from .oracle import fsm_oracle_run
from .render import RenderOptions, to_dot
from .sim import Stimulus, Trace, apply_cancellation, conformance, init_sim, run, step
from .validate import Diagnostic, ValidationReport, validate_all, validate_behavior, validate_dynamic, validate_static

__version__ = "0.1.0"
