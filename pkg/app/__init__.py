"""Flask application factory."""
import logging
import os
from logging.handlers import RotatingFileHandler

from flask import Flask, jsonify, request
from sqlalchemy.exc import SQLAlchemyError
from werkzeug.exceptions import HTTPException

from .cli import register_cli_commands
from .config import config_by_name
from .errors import CdqaoaError
from .extensions import cors, db, migrate
from .routes import register_blueprints

ENGINE_LOGGER = "app.engine"


def create_app(config_name: str | None = None) -> Flask:
    """Application factory for the Flask app."""
    app = Flask(__name__)

    env = config_name or os.getenv("FLASK_ENV", "development")
    app.config.from_object(config_by_name.get(
        env, config_by_name["development"]))

    cors.init_app(app, resources={
        r"/api/*": {
            "origins": list(app.config.get("CORS_ORIGINS", [])),
            "methods": ["GET", "POST", "OPTIONS"],
            "allow_headers": ["Content-Type"],
            "supports_credentials": False,
            "max_age": 3600
        }
    })
    db.init_app(app)
    migrate.init_app(app, db)

    configure_logging(app)

    # sqlite deployments without a migration step still get their tables
    try:
        with app.app_context():
            db.create_all()
    except SQLAlchemyError as e:
        app.logger.error("Database initialization error: %s", e)

    register_request_logging(app)
    register_blueprints(app)
    register_error_handlers(app)
    register_shellcontext(app)
    register_cli_commands(app)

    @app.get("/")
    def index():
        return {
            "name": "cdqaoa",
            "version": "1.0.0",
            "status": "running",
            "environment": env,
            "endpoints": {
                "problems": "/api/problems",
                "runs": "/api/runs",
                "runs_summary": "/api/runs/summary",
                "checks": "/api/checks",
                "health": "/health"
            }
        }

    @app.get("/health")
    def health_check():
        try:
            db.session.execute(db.text("SELECT 1"))
            db_status = "connected"
        except SQLAlchemyError as e:
            db_status = f"error: {e}"

        return {
            "status": "ok",
            "environment": env,
            "database": db_status,
            "statevector_qubit_cap": app.config["STATEVECTOR_QUBIT_CAP"],
        }

    return app


def configure_logging(app: Flask) -> None:
    """Configure application logging."""
    engine_logger = logging.getLogger(ENGINE_LOGGER)
    if not app.debug and not app.testing:
        if not os.path.exists("logs"):
            os.mkdir("logs")

        file_handler = RotatingFileHandler(
            "logs/cdqaoa.log", maxBytes=10240000, backupCount=10
        )
        file_handler.setFormatter(logging.Formatter(
            "%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]"
        ))
        file_handler.setLevel(logging.INFO)
        app.logger.addHandler(file_handler)
        if file_handler not in engine_logger.handlers:
            engine_logger.addHandler(file_handler)

        app.logger.setLevel(logging.INFO)
        engine_logger.setLevel(logging.INFO)
        app.logger.info("cdqaoa startup")
    else:
        app.logger.setLevel(logging.DEBUG)
        engine_logger.setLevel(logging.DEBUG)
        if not engine_logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
            engine_logger.addHandler(handler)


def register_request_logging(app: Flask) -> None:
    @app.before_request
    def log_request_info():
        """Log incoming request information."""
        if not app.debug:
            app.logger.info(
                "Request: %s %s - IP: %s",
                request.method,
                request.path,
                request.remote_addr,
            )


def register_error_handlers(app: Flask) -> None:
    """Register global error handlers."""

    @app.errorhandler(CdqaoaError)
    def handle_domain_error(error):
        level = logging.WARNING if error.http_status < 500 else logging.ERROR
        app.logger.log(level, "%s: %s - Path: %s", type(error).__name__, error.message, request.path)
        db.session.rollback()
        return jsonify(error.to_dict()), error.http_status

    @app.errorhandler(400)
    def bad_request(error):
        app.logger.warning("Bad request: %s", str(error))
        message = error.description if hasattr(
            error, "description") else "Bad request"
        return jsonify({"error": message}), 400

    @app.errorhandler(404)
    def not_found(error):
        app.logger.info("Resource not found: %s", request.path)
        return jsonify({"error": "Resource not found."}), 404

    @app.errorhandler(405)
    def method_not_allowed(error):
        return jsonify({"error": "Method not allowed."}), 405

    @app.errorhandler(500)
    def internal_server_error(error):
        app.logger.error(
            "Internal server error: %s - Path: %s",
            str(error),
            request.path,
            exc_info=True
        )
        db.session.rollback()
        return jsonify({"error": "Internal server error. Please try again later."}), 500

    @app.errorhandler(SQLAlchemyError)
    def handle_db_error(error):
        app.logger.error(
            "Database error: %s - Path: %s",
            str(error),
            request.path,
            exc_info=True
        )
        db.session.rollback()
        return jsonify({"error": "Database error occurred. Please try again."}), 500

    @app.errorhandler(Exception)
    def handle_unexpected_error(error):
        if isinstance(error, HTTPException):
            return error

        app.logger.critical(
            "Unexpected error: %s - Path: %s",
            str(error),
            request.path,
            exc_info=True
        )
        db.session.rollback()
        return jsonify({"error": "An unexpected error occurred."}), 500


def register_shellcontext(app: Flask) -> None:
    from . import engine
    from .models import ProblemRecord, RunRecord

    @app.shell_context_processor
    def shell_context():
        return {"db": db, "engine": engine, "ProblemRecord": ProblemRecord, "RunRecord": RunRecord}
