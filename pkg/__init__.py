"""vtl-scuc - stochastic SCUC with storage and virtual transmission lines."""

try:
    from .runner import ScucRunner
    from .models import CaseFile, ModelVariant
    from .config import APP_CONFIG, RunConfig
except ImportError:
    from runner import ScucRunner
    from models import CaseFile, ModelVariant
    from config import APP_CONFIG, RunConfig

__version__ = "1.0.0"
__all__ = ["ScucRunner", "CaseFile", "ModelVariant", "APP_CONFIG", "RunConfig"]
