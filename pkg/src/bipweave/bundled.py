"""Access to the models and aspect files shipped in ``bipweave/data``."""
from __future__ import annotations

from importlib import resources

from .frontend import AspectFile, parse_aspects, parse_model
from .model import CompositeComponent

NETWORK_CONCERNS = ("logging", "authentication", "congestion", "faulttolerance")


def read_text(name: str) -> str:
    return resources.files("bipweave").joinpath("data", name).read_text(encoding="utf-8")


def data_path(name: str) -> str:
    return str(resources.files("bipweave").joinpath("data", name))


def names(suffix: str = "") -> list[str]:
    return sorted(
        p.name for p in resources.files("bipweave").joinpath("data").iterdir() if p.name.endswith(suffix)
    )


def model(name: str) -> CompositeComponent:
    return parse_model(read_text(f"{name}.bip"), file=f"{name}.bip")


def aspects(name: str, base: CompositeComponent) -> AspectFile:
    return parse_aspects(read_text(f"{name}.abip"), base, file=f"{name}.abip")
