"""Blueprint registration."""
from flask import Flask

from .checks import checks_bp
from .problems import problems_bp
from .runs import runs_bp


def register_blueprints(app: Flask) -> None:
    app.register_blueprint(problems_bp, url_prefix="/api/problems")
    app.register_blueprint(runs_bp, url_prefix="/api/runs")
    app.register_blueprint(checks_bp, url_prefix="/api/checks")
