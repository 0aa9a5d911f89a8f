"""M-functions, scattering matrices and spectra of compact quantum graphs."""
from . import catalog
from .catalog import catalog_graph
from .graph import Condition, Edge, GraphError, MetricGraph, Vertex, glue, parse_graph, serialize_graph, validate
from .mfunction import (
    GermM,
    GraphM,
    IntervalM,
    MFunctionValue,
    StarM,
    SumM,
    eval_m,
    eval_m_many,
    m_germ,
    m_interval,
    m_star,
    m_sum,
    wigner_k,
)
from .scattering import DissipationModel, ScatterTrace, dissipative_wavenumber, freq_to_k, s_from_m, scan
from .spectra import (
    RootFindConfig,
    Spectrum,
    classify_spectrum,
    compare_spectra,
    direct_spectrum,
    find_roots,
    first_eigenvalues,
    invisible_spectrum,
    secular_value,
    visible_spectrum,
)

__version__ = "0.1.0"
