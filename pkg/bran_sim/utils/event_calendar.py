import heapq
from enum import Enum
from typing import List, Optional, Tuple


class EventType(Enum):
    ARRIVAL = 0
    MINE = 1
    SERVICE_END = 2
    REJECT = 3


# (time, sequence, type, payload); the sequence number breaks ties in scheduling order
Event = Tuple[float, int, EventType, int]


class EventCalendar:
    """Future event list ordered by time, FIFO among simultaneous events."""

    def __init__(self) -> None:
        self._events: List[Event] = []
        self._sequence = 0

    def schedule(self, time: float, event_type: EventType, payload: int = -1) -> None:
        heapq.heappush(self._events, (time, self._sequence, event_type, payload))
        self._sequence += 1

    def next_event(self) -> Optional[Event]:
        if self._events:
            return heapq.heappop(self._events)
        return None

    def __len__(self) -> int:
        return len(self._events)

    def __bool__(self) -> bool:
        return bool(self._events)
