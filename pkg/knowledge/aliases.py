"""
m3:equivalentTo による別名の同値類（Union-Find）
代表元は同値類の中で辞書順最小のIRI。
"""

from __future__ import annotations

from .terms import Iri


class AliasTable:
    def __init__(self):
        self._parent: dict[Iri, Iri] = {}

    def __len__(self):
        return len(self._parent)

    def find(self, term):
        if term not in self._parent:
            return term
        root = term
        while self._parent[root] != root:
            root = self._parent[root]
        # 経路圧縮
        while self._parent[term] != root:
            self._parent[term], term = root, self._parent[term]
        return root

    def union(self, a: Iri, b: Iri) -> bool:
        """2つのIRIを同じ同値類にする。代表元が変わったら True"""
        self._parent.setdefault(a, a)
        self._parent.setdefault(b, b)
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if root_b.value < root_a.value:
            root_a, root_b = root_b, root_a
        self._parent[root_b] = root_a
        return True

    def clear(self):
        self._parent.clear()
