"""Recognition of Goursat bundles and construction of contact coordinates."""
from .classifier import GoursatVerdict, TypeVector, classify
from .contact import ContactChart, IntegralsNotFound, build_contact_chart
from .control import ControlSystem, prolong_control
from .expr import Expression, cos, differentiate, exp, ln, sin, symbol, tan
from .geometry import Codistribution, Distribution, OneForm, VectorField, bracket, refined_derived_type
from .linalg import Sampler
from .parse import Chart, parse
from .problem import Problem, load_problem
from .verifier import certify, feedback_check, static_feedback_inspect

__version__ = "0.1.0"

__all__ = [
    "Chart", "Codistribution", "ContactChart", "ControlSystem", "Distribution", "Expression", "GoursatVerdict",
    "IntegralsNotFound", "OneForm", "Problem", "Sampler", "TypeVector", "VectorField", "bracket",
    "build_contact_chart", "certify", "classify", "cos", "differentiate", "exp", "feedback_check", "ln",
    "load_problem", "parse", "prolong_control", "refined_derived_type", "sin", "static_feedback_inspect",
    "symbol", "tan",
]
