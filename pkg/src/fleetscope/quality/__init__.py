from .bench import BenchRow, bench, bench_rows_to_csv
from .metrics import QualityReport, adjusted_rand_index, normalize_reports, quality_report
from .synth import SynthSpec, synth_generate

__all__ = [
    "BenchRow",
    "QualityReport",
    "SynthSpec",
    "adjusted_rand_index",
    "bench",
    "bench_rows_to_csv",
    "normalize_reports",
    "quality_report",
    "synth_generate",
]
