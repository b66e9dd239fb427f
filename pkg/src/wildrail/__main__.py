"""Allow ``python -m wildrail``."""

from .cli import run

if __name__ == "__main__":
    run()
