""":module: spikegat.trace
:synopsis: Forward-pass events and event handlers.

Event Classes
-------------
.. autoclass:: TraceEvent
   :members:

.. autoclass:: ProjectionEvent
   :members:
   :show-inheritance:

.. autoclass:: ChargeEvent
   :members:
   :show-inheritance:

.. autoclass:: FireEvent
   :members:
   :show-inheritance:

.. autoclass:: ScoreEvent
   :members:
   :show-inheritance:

.. autoclass:: NormalizeEvent
   :members:
   :show-inheritance:

.. autoclass:: AggregateEvent
   :members:
   :show-inheritance:

Recording
---------
.. autoclass:: ForwardTrace
   :members:

Event Handler Classes
---------------------
.. autoclass:: TraceHandler
   :members:

.. autoclass:: LoggingTraceHandler
   :members:
   :show-inheritance:

A forward pass given a :class:`ForwardTrace` records one event per counted
operation. Events only carry sizes (rows, edge slots, spike counts), never
values, so a trace is a small, deterministic description of the work a pass
did. Handlers consume traces either live, as events are recorded, or later
through :meth:`ForwardTrace.replay`.
"""

from __future__ import annotations

import contextlib
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, ClassVar

if TYPE_CHECKING:
    from collections.abc import Iterator

EVENT_TYPE_PROJECTION = "projection"
EVENT_TYPE_CHARGE = "charge"
EVENT_TYPE_FIRE = "fire"
EVENT_TYPE_SCORE = "score"
EVENT_TYPE_NORMALIZE = "normalize"
EVENT_TYPE_AGGREGATE = "aggregate"

ATTENTION_SPIKING = "spiking"
ATTENTION_BASELINE = "baseline"


@dataclass(frozen=True)
class TraceEvent:
    """Immutable record of one operation in a forward pass.

    ``layer`` and ``head`` are filled in by :class:`ForwardTrace` from the
    scope active when the event is recorded.
    """

    event_type: ClassVar[str] = ""
    layer: int = field(default=-1, kw_only=True)
    head: int = field(default=-1, kw_only=True)


@dataclass(frozen=True)
class ProjectionEvent(TraceEvent):
    """Dense product of a ``rows x inner`` by an ``inner x cols`` matrix."""

    event_type: ClassVar[str] = EVENT_TYPE_PROJECTION
    rows: int
    inner: int
    cols: int


@dataclass(frozen=True)
class ChargeEvent(TraceEvent):
    """One integrate step ``V += Z @ Theta`` driven by ``spikes`` ones in ``Z``."""

    event_type: ClassVar[str] = EVENT_TYPE_CHARGE
    step: int
    spikes: int
    out_cols: int


@dataclass(frozen=True)
class FireEvent(TraceEvent):
    """Threshold comparison and reset of ``neurons`` potentials at one step."""

    event_type: ClassVar[str] = EVENT_TYPE_FIRE
    step: int
    neurons: int
    fired: int


@dataclass(frozen=True)
class ScoreEvent(TraceEvent):
    """Raw per-edge attention scores over ``edges`` slots of width ``width``."""

    event_type: ClassVar[str] = EVENT_TYPE_SCORE
    kind: str
    edges: int
    width: int


@dataclass(frozen=True)
class NormalizeEvent(TraceEvent):
    """Softmax (baseline) or symmetric (spiking) normalisation of edge scores."""

    event_type: ClassVar[str] = EVENT_TYPE_NORMALIZE
    kind: str
    edges: int
    nodes: int
    zeros: int = 0


@dataclass(frozen=True)
class AggregateEvent(TraceEvent):
    """Sparse weighted sum of ``width``-wide features over ``edges`` slots."""

    event_type: ClassVar[str] = EVENT_TYPE_AGGREGATE
    edges: int
    width: int


class TraceHandler:
    """Base trace handler that you can override methods from."""

    def dispatch(self, event: TraceEvent) -> None:
        """Dispatches events to the appropriate methods.

        :param event:
            The recorded event.
        :type event:
            :class:`TraceEvent`
        """
        self.on_any_event(event)
        getattr(self, f"on_{event.event_type}")(event)

    def on_any_event(self, event: TraceEvent) -> None:
        """Catch-all event handler."""

    def on_projection(self, event: ProjectionEvent) -> None:
        """Called for every dense projection."""

    def on_charge(self, event: ChargeEvent) -> None:
        """Called for every integrate step of a spiking attention head."""

    def on_fire(self, event: FireEvent) -> None:
        """Called for every fire-and-reset step of a spiking attention head."""

    def on_score(self, event: ScoreEvent) -> None:
        """Called when raw edge scores are formed."""

    def on_normalize(self, event: NormalizeEvent) -> None:
        """Called when edge scores are normalised."""

    def on_aggregate(self, event: AggregateEvent) -> None:
        """Called for every neighbourhood aggregation."""


class LoggingTraceHandler(TraceHandler):
    """Logs every recorded event."""

    def __init__(self, *, logger: logging.Logger | None = None) -> None:
        super().__init__()
        self.logger = logger or logging.getLogger(__name__)

    def on_projection(self, event: ProjectionEvent) -> None:
        super().on_projection(event)

        self.logger.debug("Layer %d head %d: projection %dx%d by %dx%d", event.layer, event.head, event.rows, event.inner, event.inner, event.cols)

    def on_charge(self, event: ChargeEvent) -> None:
        super().on_charge(event)

        self.logger.debug("Layer %d head %d: step %d charged by %d spikes", event.layer, event.head, event.step, event.spikes)

    def on_fire(self, event: FireEvent) -> None:
        super().on_fire(event)

        self.logger.debug("Layer %d head %d: step %d fired %d of %d neurons", event.layer, event.head, event.step, event.fired, event.neurons)

    def on_score(self, event: ScoreEvent) -> None:
        super().on_score(event)

        self.logger.debug("Layer %d head %d: %s scores on %d edges", event.layer, event.head, event.kind, event.edges)

    def on_normalize(self, event: NormalizeEvent) -> None:
        super().on_normalize(event)

        self.logger.debug(
            "Layer %d head %d: %s normalisation, %d of %d edges zero",
            event.layer,
            event.head,
            event.kind,
            event.zeros,
            event.edges,
        )

    def on_aggregate(self, event: AggregateEvent) -> None:
        super().on_aggregate(event)

        self.logger.debug("Layer %d head %d: aggregated %d edges of width %d", event.layer, event.head, event.edges, event.width)


class ForwardTrace:
    """Ordered record of the events of one or more forward passes.

    :param handlers:
        Handlers receiving each event as soon as it is recorded.
    """

    def __init__(self, *handlers: TraceHandler) -> None:
        self._events: list[TraceEvent] = []
        self._handlers = list(handlers)
        self._layer = -1
        self._head = -1

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self._events)

    @property
    def events(self) -> list[TraceEvent]:
        return list(self._events)

    @contextlib.contextmanager
    def scope(self, layer: int, head: int) -> Iterator[None]:
        """Stamps events recorded inside the block with ``layer`` and ``head``."""
        saved = self._layer, self._head
        self._layer, self._head = layer, head
        try:
            yield
        finally:
            self._layer, self._head = saved

    def record(self, event: TraceEvent) -> None:
        event = dataclasses.replace(event, layer=self._layer, head=self._head)
        self._events.append(event)
        for handler in self._handlers:
            handler.dispatch(event)

    def replay(self, handler: TraceHandler) -> TraceHandler:
        """Dispatches every recorded event to ``handler`` in order and returns it."""
        for event in self._events:
            handler.dispatch(event)
        return handler
