"""Decorators shared by the CLI commands and the JSON routes."""
from __future__ import annotations

from functools import wraps

import click
from flask import current_app, jsonify, request

from ..errors import CdqaoaError


def cli_errors(fn):
    """Turn ``CdqaoaError`` into a message on stderr and exit code 2 or 3."""
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CdqaoaError as exc:
            current_app.logger.error("%s failed: %s", fn.__name__, exc.message)
            context = ", ".join(f"{k}={v}" for k, v in exc.context.items())
            click.echo(f"error: {exc.message}" + (f" ({context})" if context else ""), err=True)
            raise click.exceptions.Exit(exc.exit_code) from None

    return wrapper


def json_body(fn):
    """Pass the request's JSON object to the view, or answer 400."""
    @wraps(fn)
    def wrapper(*args, **kwargs):
        data = request.get_json(silent=True)
        if not isinstance(data, dict):
            return jsonify({"error": "Request body must be a JSON object."}), 400
        return fn(data, *args, **kwargs)

    return wrapper
