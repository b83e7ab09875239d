"""Access to the shipped PDDL fixtures."""

from __future__ import annotations

from functools import lru_cache
from importlib.resources import files

from .pddl import parse_domain, parse_streams


def fixture_text(name: str) -> str:
    return files("tampush.fixtures").joinpath(name).read_text()


@lru_cache(maxsize=None)
def default_domain():
    return parse_domain(fixture_text("domain.pddl"))


@lru_cache(maxsize=None)
def default_streams():
    return tuple(parse_streams(fixture_text("stream.pddl"), default_domain()))
