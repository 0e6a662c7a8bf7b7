from .charts import emit_chart, render_chart
from .config import RunConfig, load_config, parse_config, save_config
from .pipeline import run
from .summary import model_summary
from .tables import Grid, emit_table, emit_tidy, render_table

__all__ = [
    "Grid",
    "RunConfig",
    "emit_chart",
    "emit_table",
    "emit_tidy",
    "load_config",
    "model_summary",
    "parse_config",
    "render_chart",
    "render_table",
    "run",
    "save_config",
]
