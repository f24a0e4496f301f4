"""Counted B-tree over opaque items.

Internal bookkeeping for the dynamic set: leaves hold items, every node keeps
the element counts of its children as prefix sums packed into a single int
(``field_bits`` bits per child).  Adding ``delta`` to all prefix sums from
child ``i`` on is then one multiply-add, and rank descent is a binary search
over the packed fields.

Items must expose writable ``parent``, ``prev`` and ``next`` attributes; the
tree threads them into a doubly linked list in order.
"""

from __future__ import annotations

from typing import Any, Callable, Iterator


class _Node:
    __slots__ = ("children", "word", "parent", "leaf")

    def __init__(self, leaf: bool):
        self.children: list = []
        self.word = 0
        self.parent: _Node | None = None
        self.leaf = leaf


class CountedTree:
    def __init__(self, fanout: int, size_of: Callable[[Any], int], field_bits: int = 40):
        if fanout < 2:
            raise ValueError("fanout must be at least 2")
        self.fanout = fanout
        self.max_children = 2 * fanout
        self.min_children = max(2, fanout // 2)
        self.size_of = size_of
        self.f = field_bits
        self.fmask = (1 << field_bits) - 1
        self._ones = [0]
        self._grow_ones(self.max_children + 2)
        self.root = _Node(leaf=True)
        self.first = None
        self.last = None

    def _grow_ones(self, k: int) -> None:
        ones = self._ones
        while len(ones) <= k:
            ones.append(ones[-1] | (1 << ((len(ones) - 1) * self.f)))

    # ------------------------------------------------------------ word helpers
    def _field(self, node: _Node, i: int) -> int:
        return (node.word >> (i * self.f)) & self.fmask

    def _total(self, node: _Node) -> int:
        k = len(node.children)
        return (node.word >> ((k - 1) * self.f)) & self.fmask if k else 0

    def _child_total(self, node: _Node, child) -> int:
        return self._total(child) if not node.leaf else self.size_of(child)

    def _repack(self, node: _Node) -> None:
        word = 0
        acc = 0
        f = self.f
        for i, c in enumerate(node.children):
            acc += self._child_total(node, c)
            word |= acc << (i * f)
        if acc > self.fmask:
            self._widen(acc)
            return self._repack(node)
        node.word = word

    def _widen(self, need: int) -> None:
        nodes = list(self._nodes_postorder())
        self.f = max(self.f * 2, need.bit_length() + 2)
        self.fmask = (1 << self.f) - 1
        self._ones = [0]
        self._grow_ones(self.max_children + 2)
        for nd in nodes:  # children before parents
            word = 0
            acc = 0
            for i, c in enumerate(nd.children):
                acc += self._child_total(nd, c)
                word |= acc << (i * self.f)
            nd.word = word

    def _nodes_postorder(self) -> Iterator[_Node]:
        stack = [(self.root, False)]
        while stack:
            nd, done = stack.pop()
            if done or nd.leaf:
                yield nd
                continue
            stack.append((nd, True))
            for c in reversed(nd.children):
                stack.append((c, False))

    def _search(self, node: _Node, rank: int) -> int:
        """Smallest child index whose prefix sum exceeds rank."""
        lo, hi = 0, len(node.children) - 1
        word, f, mask = node.word, self.f, self.fmask
        while lo < hi:
            mid = (lo + hi) >> 1
            if (word >> (mid * f)) & mask > rank:
                hi = mid
            else:
                lo = mid + 1
        return lo

    # ---------------------------------------------------------------- queries
    def __len__(self) -> int:
        return self._total(self.root)

    @property
    def total(self) -> int:
        return self._total(self.root)

    def locate(self, rank: int) -> tuple[Any, int]:
        """Item holding element ``rank`` and the rank inside that item."""
        node = self.root
        f, mask = self.f, self.fmask
        while True:
            i = self._search(node, rank)
            if i:
                rank -= (node.word >> ((i - 1) * f)) & mask
            child = node.children[i]
            if node.leaf:
                return child, rank
            node = child

    def rank_of(self, item) -> int:
        """Number of elements in items before ``item``."""
        r = 0
        child = item
        node = item.parent
        f, mask = self.f, self.fmask
        while node is not None:
            i = node.children.index(child)
            if i:
                r += (node.word >> ((i - 1) * f)) & mask
            child = node
            node = node.parent
        return r

    def find_first(self, x, key: Callable[[Any], Any]):
        """Leftmost item with key(item) >= x, or None.

        Internal nodes compare against the key of the right-most item below
        each child.
        """
        node = self.root
        if not node.children:
            return None
        while True:
            ch = node.children
            lo, hi = 0, len(ch)
            leaf = node.leaf
            while lo < hi:
                mid = (lo + hi) >> 1
                c = ch[mid]
                if not leaf:
                    while not c.leaf:
                        c = c.children[-1]
                    c = c.children[-1]
                if key(c) < x:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == len(ch):
                return None
            if leaf:
                return ch[lo]
            node = ch[lo]

    def __iter__(self) -> Iterator[Any]:
        it = self.first
        while it is not None:
            yield it
            it = it.next

    def count_items(self) -> int:
        return sum(1 for _ in self)

    def height(self) -> int:
        h = 1
        node = self.root
        while not node.leaf:
            node = node.children[0]
            h += 1
        return h

    def node_count(self) -> int:
        return sum(1 for _ in self._nodes_postorder())

    # ---------------------------------------------------------------- updates
    def adjust(self, item, delta: int) -> None:
        """Item's size changed by delta; fix the prefix sums above it."""
        child = item
        node = item.parent
        f = self.f
        ones = self._ones
        while node is not None:
            ch = node.children
            i = ch.index(child)
            k = len(ch)
            node.word += delta * (ones[k] - ones[i])
            child = node
            node = node.parent
        if self._total(self.root) > self.fmask >> 1:
            self._widen(self._total(self.root) * 2)

    def build(self, items: list) -> None:
        """Replace the contents with ``items`` (in order), bulk loaded."""
        prev = None
        for it in items:
            it.prev = prev
            it.next = None
            if prev is not None:
                prev.next = it
            prev = it
        self.first = items[0] if items else None
        self.last = items[-1] if items else None
        level = []
        fill = self.fanout
        for start in range(0, max(1, len(items)), fill):
            nd = _Node(leaf=True)
            nd.children = items[start:start + fill]
            for it in nd.children:
                it.parent = nd
            level.append(nd)
        self._fix_tail(level)
        for nd in level:
            self._repack(nd)
        while len(level) > 1:
            up = []
            for start in range(0, len(level), fill):
                nd = _Node(leaf=False)
                nd.children = level[start:start + fill]
                for c in nd.children:
                    c.parent = nd
                up.append(nd)
            self._fix_tail(up)
            for nd in up:
                self._repack(nd)
            level = up
        self.root = level[0]
        self.root.parent = None

    def _fix_tail(self, level: list[_Node]) -> None:
        # fold an undersized last node into its left neighbour
        if len(level) > 1 and len(level[-1].children) < self.min_children:
            tail = level.pop()
            level[-1].children.extend(tail.children)
            for c in tail.children:
                c.parent = level[-1]

    def insert_after(self, ref, item) -> None:
        """Insert item right after ref (or first if ref is None)."""
        if ref is None:
            nxt = self.first
            item.prev = None
            item.next = nxt
            if nxt is None:
                self.last = item
                node = self.root
                idx = 0
            else:
                nxt.prev = item
                node = nxt.parent
                idx = 0
            self.first = item
        else:
            item.prev = ref
            item.next = ref.next
            if ref.next is not None:
                ref.next.prev = item
            else:
                self.last = item
            ref.next = item
            node = ref.parent
            idx = node.children.index(ref) + 1
        node.children.insert(idx, item)
        item.parent = node
        self._repack(node)
        self._propagate(node, self.size_of(item))
        self._split_if_needed(node)

    def insert_before(self, ref, item) -> None:
        self.insert_after(ref.prev, item)

    def append(self, item) -> None:
        self.insert_after(self.last, item)

    def _propagate(self, node: _Node, delta: int) -> None:
        """Add delta to the ancestors' counts of node's subtree."""
        child = node
        parent = node.parent
        ones = self._ones
        while parent is not None:
            ch = parent.children
            i = ch.index(child)
            parent.word += delta * (ones[len(ch)] - ones[i])
            child = parent
            parent = parent.parent
        if self._total(self.root) > self.fmask >> 1:
            self._widen(self._total(self.root) * 2)

    def _split_if_needed(self, node: _Node) -> None:
        while len(node.children) > self.max_children:
            h = len(node.children) >> 1
            right = _Node(node.leaf)
            right.children = node.children[h:]
            del node.children[h:]
            for c in right.children:
                c.parent = right
            self._repack(node)
            self._repack(right)
            parent = node.parent
            if parent is None:
                parent = _Node(leaf=False)
                parent.children = [node]
                node.parent = parent
                self.root = parent
            idx = parent.children.index(node)
            parent.children.insert(idx + 1, right)
            right.parent = parent
            self._repack(parent)
            node = parent

    def remove(self, item) -> None:
        size = self.size_of(item)
        node = item.parent
        if item.prev is not None:
            item.prev.next = item.next
        else:
            self.first = item.next
        if item.next is not None:
            item.next.prev = item.prev
        else:
            self.last = item.prev
        node.children.remove(item)
        item.parent = item.prev = item.next = None
        self._repack(node)
        self._propagate(node, -size)
        self._rebalance(node)

    def _rebalance(self, node: _Node) -> None:
        while True:
            parent = node.parent
            if parent is None:
                # collapse a root with a single internal child
                while not node.leaf and len(node.children) == 1:
                    node = node.children[0]
                    node.parent = None
                self.root = node
                return
            if len(node.children) >= self.min_children:
                return
            idx = parent.children.index(node)
            if idx + 1 < len(parent.children):
                left, right = node, parent.children[idx + 1]
            else:
                left, right = parent.children[idx - 1], node
            left.children.extend(right.children)
            for c in right.children:
                c.parent = left
            parent.children.remove(right)
            right.children = []
            self._repack(left)
            self._repack(parent)
            if len(left.children) > self.max_children:
                self._split_if_needed(left)
                # splitting may have grown parent back; re-check from parent
            node = left.parent if left.parent is not None else left

    # ------------------------------------------------------------------ audit
    def audit(self) -> list[str]:
        errs = []
        items = []

        def walk(node: _Node, depth: int) -> int:
            total = 0
            for i, c in enumerate(node.children):
                if c.parent is not node:
                    errs.append("broken parent pointer")
                sub = self.size_of(c) if node.leaf else walk(c, depth + 1)
                if node.leaf:
                    items.append(c)
                total += sub
                if self._field(node, i) != total:
                    errs.append(f"prefix sum mismatch at depth {depth}, child {i}")
            if node is not self.root and len(node.children) > self.max_children:
                errs.append(f"node overfull ({len(node.children)} children)")
            if node is not self.root and len(node.children) < self.min_children:
                errs.append(f"node underfull ({len(node.children)} children)")
            return total

        walk(self.root, 0)
        linked = list(self)
        if linked != items:
            errs.append("linked item order differs from tree order")
        leaf_depths = set()

        def depths(node, d):
            if node.leaf:
                leaf_depths.add(d)
            else:
                for c in node.children:
                    depths(c, d + 1)

        depths(self.root, 0)
        if len(leaf_depths) > 1:
            errs.append("leaves at different depths")
        return errs

    def size_bits(self, pointer_bits: int = 64) -> int:
        """Packed counters plus one child pointer per internal-node child."""
        bits = 0
        for nd in self._nodes_postorder():
            k = len(nd.children)
            bits += k * self.f
            if not nd.leaf:
                bits += k * pointer_bits
        return bits
