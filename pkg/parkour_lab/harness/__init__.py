from .config import RunConfig, RunSettings, config_digest
from .training import (
    METRICS_COLUMNS,
    Trainer,
    build_agent,
    build_env,
    latest_checkpoint,
    load_agent,
    network_config,
    sidecar_path,
    train,
    window_rates,
)
from .evaluation import (
    EVAL_COMMAND,
    EvalReport,
    evaluate,
    regression_errors,
    reports_frame,
    summarize,
)
from .ablation import ablation_frame, ablation_run
