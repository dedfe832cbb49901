"""
Monge maps for Finsler and Mañé transport costs
"""

# Lazy imports so that subpackages (geometry, cost_engine, ...) load without
# pulling in the whole pipeline

__version__ = "1.0.0"

def __getattr__(name):
    """Lazy load the pipeline objects only when accessed"""
    if name == "MongeWorkflow":
        from .workflow import MongeWorkflow
        return MongeWorkflow
    elif name == "MongeContext":
        from .config import MongeContext
        return MongeContext
    elif name == "RunConfig":
        from .config import RunConfig
        return RunConfig
    elif name == "load_run_config":
        from .config import load_run_config
        return load_run_config
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

__all__ = [
    'MongeWorkflow',
    'MongeContext',
    'RunConfig',
    'load_run_config'
]
