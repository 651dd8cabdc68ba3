"""NS-watermark DNA barcodes: construction, chemical filtering and demultiplexing."""

__version__ = "0.1.0"

from .barcode_set import BarcodeSet, BuildReport, build_set
from .barcodes import CodeParams
from .channel import IdsParams
from .chemistry import FilterThresholds
from .demux import Demultiplexer, DemuxOptions, DemuxResult
from .evaluate import MonteCarloReport, run_experiment, sweep

__all__ = ["BarcodeSet", "BuildReport", "build_set", "CodeParams", "IdsParams", "FilterThresholds",
           "Demultiplexer", "DemuxOptions", "DemuxResult", "MonteCarloReport", "run_experiment", "sweep"]
