from .app import ApiError, BindFailure, ServiceConfig, TOKEN_HEADER, create_app

__all__ = ["ApiError", "BindFailure", "ServiceConfig", "TOKEN_HEADER", "create_app"]
