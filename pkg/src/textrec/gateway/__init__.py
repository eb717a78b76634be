from .app import create_app
from .service import RecommenderService, ServeConfig, ServiceError, UnknownUserError

__all__ = [
    "RecommenderService",
    "ServeConfig",
    "ServiceError",
    "UnknownUserError",
    "create_app",
]
