import math
import zlib

from collections import deque
from operator import attrgetter
from typing import Any, Callable, Iterable, Optional, TypeVar


T = TypeVar('T')


def find(predicate: Callable[[T], Any], iterable: Iterable[T]) -> Optional[T]:
    """A helper to return the first element found in the sequence
    that meets the predicate.

    For example: ::

        ptz = crew.utils.find(lambda c: c.kind is CameraKind.ptz, scenario.cameras)

    would find the first PTZ camera of the scenario and return it.
    If the scenario has no PTZ camera, then ``None`` is returned.

    Parameters
    -----------
    predicate
        A function that returns a boolean-like result.
    iterable: iterable
        The iterable to search through.

    Returns
    -------
    The first item in the iterable which matches the predicate passed.
    """
    for element in iterable:
        if predicate(element):
            return element
    return None


def get(iterable: Iterable[T], **attrs: Any) -> Optional[T]:
    r"""A helper that returns the first item in an iterable that matches the attributes passed.

    If no match is found, ``None`` is returned.

    Example
    -------
    .. code-block:: python3

        zone = utils.get(scenario.zones, id="hall_door")
        # returns the zone declared with id "hall_door"

        overview = utils.get(scenario.cameras, kind=CameraKind.overview, id="c2")

    Parameters
    ----------
    iterable: iterable
        The list of items to match the attributes from
    \*\*attrs
        A series of kwargs that specify which attributes to match.

    Returns
    -------
    The object from the iterable that matches the attributes passed, or ``None`` if not found.
    """
    converted = [(attrgetter(attr), value) for attr, value in attrs.items()]
    for elem in iterable:
        if all(pred(elem) == value for pred, value in converted):
            return elem
    return None


def fixed(value: Optional[float], places: int = 4) -> str:
    """Formats a number the way every output file writes numbers: fixed point, 4 decimals.

    ``None`` becomes an empty cell and negative zero is written as zero,
    so equal runs give byte-identical files.
    """
    if value is None:
        return ""
    text = "{:.{}f}".format(value, places)
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def wrap_angle(angle):
    """Wraps an angle in radians into ``[-pi, pi)``. Works element-wise on numpy arrays too."""
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def undecodable_line(exc: UnicodeDecodeError) -> int:
    """The 1-based line of the first byte that is not valid UTF-8."""
    return exc.object.count(b"\n", 0, exc.start) + 1


def stable_seed(*parts: Any) -> int:
    """A platform-independent 32-bit seed derived from ``parts``.

    ``hash()`` is salted per interpreter, so seeds are built from a CRC of the text form instead.
    """
    return zlib.crc32("\x1f".join(str(p) for p in parts).encode("utf-8"))


class StageStats(dict):
    """Implements a basic key: deque value to aid with per-stage timing stats of a run."""

    __slots__ = ("max_size",)

    def __init__(self, max_size):
        self.max_size = max_size
        super().__init__()

    def __setitem__(self, key, value):
        try:
            super().__getitem__(key).append(value)
        except (KeyError, AttributeError):
            super().__setitem__(key, deque((value,), maxlen=self.max_size))

    def get_average(self, key):
        """Get the average duration for a pipeline stage"""
        try:
            stats = self[key]
        except KeyError:
            return None

        return sum(stats) / len(stats)

    def get_all_average(self):
        """Get the average duration for each pipeline stage."""
        return {k: self.get_average(k) for k in self}
