from .manifest import RunManifest, get_version
from .renderer import ChartSeries, render_regret_chart
from .tables import (
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    format_float,
    read_trace_csv,
    write_sweep_csv,
    write_trace_csv,
)
