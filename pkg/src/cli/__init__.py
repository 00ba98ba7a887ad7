from .commands import build_parser, cmd_plot, cmd_run, cmd_sweep, cmd_validate, main
