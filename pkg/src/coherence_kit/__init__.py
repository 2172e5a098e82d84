"""Resource theories of coherence relative to a set of commuting generators."""
from .opspace import BACKEND, herm_eig, relative_entropy, trace_norm, von_neumann_entropy
from .structure import (
    StructureSpec,
    TranslationDistribution,
    build_structure,
    collective_generator,
    dephase,
    mode_decomposition,
    mode_project,
    translate,
    weighted_twirl,
)
from .quantum import DensityOperator, Effect, Povm, QuantumChannel, channel_from_kraus
from .classify import (
    ClassificationReport,
    classify_channel,
    classify_povm,
    classify_unitary,
    extract_mode_kraus,
    is_dc,
    is_ip,
    is_tc,
)
from .measures import MeasureSpec, parse_measure
from .harness import monotonicity_sweep, sample_channel

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
