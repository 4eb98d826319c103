"""Entry point for python -m stimtomo."""

from stimtomo.cli import app

if __name__ == "__main__":
    app()
