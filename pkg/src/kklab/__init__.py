"""kklab: curvature decomposition and path-integral reduction on Kaluza-Klein bundles."""
from .bundle import KKBundle, assemble_kk_metric, decomposition_report
from .chart import ChartedMetric, FDScheme, SignConvention, curvature_pack
from .errors import (
    ChartExit,
    ConfigError,
    InsufficientPaths,
    InvalidStructure,
    KKLabError,
    NumericalFailure,
    OutOfDomain,
    RepresentationMismatch,
    SingularMetric,
)
from .lie import LieStructure, build_abelian, build_su2
from .params import PhysicalParams

__version__ = "0.1.0"
