"""Service launcher: ``wcam-server serve --model tiny --port 8008``."""

from __future__ import annotations

import click
import uvicorn

from .app import create_app
from .models import load_model


@click.group()
def main():
    """Reference scoring service."""


@main.command("serve")
@click.option("--model", default="tiny", show_default=True,
              help="tiny | torchvision:<arch>.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Weight-init seed.")
@click.option("--weights", default=None, help="Optional state-dict file.")
@click.option("--classes", default=10, show_default=True,
              help="Class count for the built-in model.")
def serve(model, device, host, port, seed, weights, classes):
    """Host the model behind POST /score and GET /info."""
    loaded = load_model(model, device=device, seed=seed, weights=weights,
                        classes=classes)
    app = create_app(loaded)
    click.echo(f"serving {loaded.name} ({loaded.classes} classes) on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
