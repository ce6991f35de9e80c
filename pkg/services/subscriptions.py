"""
推論結果の購読

パターンに単一化できる新規の推論トリプルごとに、購読先へエンベロープを1回だけ配信する。
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

from gateway.egress import parse_target
from knowledge.patterns import TriplePattern, unify
from knowledge.query import parse_pattern
from knowledge.rules import format_pattern

from .exceptions import InvalidSubscription


@dataclass(frozen=True)
class Subscription:
    id: str
    pattern: TriplePattern
    endpoint: object

    def __post_init__(self):
        if self.pattern.concrete_count() < 1:
            raise InvalidSubscription("pattern must have at least one concrete position")

    def matches(self, fact):
        return unify(self.pattern, fact) is not None

    def as_dict(self):
        return {"id": self.id, "pattern": format_pattern(self.pattern), "endpoint": self.endpoint.as_dict()}


def parse_subscription(data):
    """{"id"?, "pattern": "?o m3:indicates m3:Fever", "endpoint": {...}} → (id, pattern, endpoint)"""
    if not isinstance(data, dict):
        raise InvalidSubscription("subscription must be a JSON object")
    if not isinstance(data.get("pattern"), str):
        raise InvalidSubscription("pattern must be a string")
    sub_id = data.get("id")
    if sub_id is not None and (not isinstance(sub_id, str) or not sub_id):
        raise InvalidSubscription("id must be a nonempty string")
    return sub_id, parse_pattern(data["pattern"]), parse_target(data.get("endpoint"))


class SubscriptionRegistry:
    def __init__(self):
        self._entries: dict[str, Subscription] = {}
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def register(self, pattern, endpoint, sub_id=None) -> Subscription:
        with self._lock:
            if sub_id is None:
                sub_id = f"sub-{next(self._counter)}"
                while sub_id in self._entries:
                    sub_id = f"sub-{next(self._counter)}"
            elif sub_id in self._entries:
                raise InvalidSubscription(f"duplicate subscription id {sub_id!r}")
            subscription = Subscription(sub_id, pattern, endpoint)
            self._entries[sub_id] = subscription
        return subscription

    def all(self):
        return list(self._entries.values())

    def matching(self, fact):
        return [s for s in self.all() if s.matches(fact)]
