"""Bundled example programs."""

from importlib import resources


def path(name: str):
    if not name.endswith(".ps"):
        name += ".ps"
    return resources.files(__name__).joinpath(name)


def source(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    """Parse a bundled program by name (``"example1"`` or ``"example1.ps"``)."""
    from ..ir import parse

    return parse(source(name))


def names() -> list[str]:
    return sorted(p.name[:-3] for p in resources.files(__name__).iterdir() if p.name.endswith(".ps"))
