from rltc.bench.external import EXTERNAL_TOOLS, ExternalToolMissing, external_roundtrip
from rltc.bench.ratio import REFERENCE_ROWS, ReferenceRow, ZeroCompressedSize, compression_ratio, reference_report
from rltc.bench.sweep import SweepRow, VerificationFailed, sweep_chunk_sizes, throughput, write_sweep_csv
from rltc.bench.table import BaselineTable, TableRow, baseline_table, format_table, write_table_csv

__all__ = [
    "BaselineTable",
    "EXTERNAL_TOOLS",
    "ExternalToolMissing",
    "REFERENCE_ROWS",
    "ReferenceRow",
    "SweepRow",
    "TableRow",
    "VerificationFailed",
    "ZeroCompressedSize",
    "baseline_table",
    "compression_ratio",
    "external_roundtrip",
    "format_table",
    "reference_report",
    "sweep_chunk_sizes",
    "throughput",
    "write_sweep_csv",
    "write_table_csv",
]
