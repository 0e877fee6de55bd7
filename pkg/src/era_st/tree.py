"""Suffix subtree construction, binary serialization, and the query engine.

A subtree is built from its SA and LCP triples in one left-to-right sweep:
leaves are appended in SA order and internal nodes are inserted on the
rightmost path at the depths the LCP triples dictate.  Edges store a
(text position, length) pair into the input string, never explicit labels.

Queries descend the top trie one symbol at a time, load at most one subtree
file on the way down, and compare edge labels against the text.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from .blockio import IoStats, charge_write
from .errors import CorruptArraysError, IndexCorruptError
from .horizontal import SubtreeArrays
from .text import Text
from .vertical import TopTrie, TrieLeaf, TrieNode

SUBTREE_MAGIC = b"ERST"
SUBTREE_VERSION = 1

_HEADER = struct.Struct("<4sHH")
_COUNT = struct.Struct("<Q")
_NODE_FIXED = struct.Struct("<QQH")
_CHILD = struct.Struct("<I")
_LEAF_FLAG = struct.Struct("<B")
_LEAF_POS = struct.Struct("<Q")


@dataclass
class Node:
    """One subtree node: an edge into the text plus ordered children.

    ``edge_start`` is the 1-based text position of the edge label's first
    symbol; the root of a multi-leaf subtree carries no edge (0, 0).  Leaves
    are childless and store the start position of their suffix.
    """

    edge_start: int
    edge_len: int
    children: list[int] = field(default_factory=list)
    leaf_pos: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf_pos is not None


@dataclass
class SuffixSubtree:
    """All suffixes sharing one prefix, as a path-compressed tree.

    Nodes are stored in depth-first preorder; ``nodes[root]`` is the subtree
    root, attached at string depth len(prefix).  In-order leaf traversal
    reproduces the relative suffix array.
    """

    prefix: bytes
    nodes: list[Node]
    root: int = 0

    def leaf_positions(self) -> list[int]:
        return list(self.iter_leaves(self.root))

    def iter_leaves(self, node_index: int) -> Iterator[int]:
        node = self.nodes[node_index]
        if node.is_leaf:
            yield node.leaf_pos
            return
        for child in node.children:
            yield from self.iter_leaves(child)

    def leaf_count(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)


def build_subtree(arrays: SubtreeArrays, text: Text) -> SuffixSubtree:
    """Single sweep over (sa, lcp): append leaves left to right, splitting the
    rightmost path where the branch depth falls between existing nodes."""
    sa, lcp, prefix = arrays.sa, arrays.lcp, arrays.prefix
    m = len(sa)
    if m == 0:
        raise CorruptArraysError("empty suffix array")
    if len(lcp) != m - 1:
        raise CorruptArraysError(f"expected {m - 1} lcp triples, got {len(lcp)}")
    n = text.n
    depth0 = len(prefix)
    for left, right, depth in lcp:
        if depth < depth0:
            raise CorruptArraysError(f"branch depth {depth} above the prefix depth {depth0}")
        if left >= right:
            raise CorruptArraysError(f"branch symbols out of order ({left} >= {right})")

    def leaf_for(pos: int, depth: int) -> Node:
        start = pos + depth
        if start > n:
            raise CorruptArraysError(f"suffix {pos} has no symbols below depth {depth}")
        return Node(start, n - start + 1, leaf_pos=pos)

    if m == 1:
        return SuffixSubtree(prefix, [leaf_for(sa[0], depth0)])

    nodes: list[Node] = [Node(0, 0)]
    # rightmost path: (node index, string depth), outermost first
    stack: list[tuple[int, int]] = [(0, depth0)]
    nodes.append(leaf_for(sa[0], depth0))
    nodes[0].children.append(1)

    for i in range(1, m):
        depth = lcp[i - 1][2]
        while stack and stack[-1][1] > depth:
            stack.pop()
        if not stack:
            raise CorruptArraysError("branch depth below the subtree root")
        top_idx, top_depth = stack[-1]
        if top_depth == depth:
            parent = top_idx
        else:
            # split the last edge of the stack top at the branch depth
            child_idx = nodes[top_idx].children[-1]
            child = nodes[child_idx]
            delta = depth - top_depth
            if delta >= child.edge_len:
                raise CorruptArraysError(
                    f"branch depth {depth} beyond the pending edge (len {child.edge_len})"
                )
            mid = Node(child.edge_start, delta, [child_idx])
            child.edge_start += delta
            child.edge_len -= delta
            nodes.append(mid)
            mid_idx = len(nodes) - 1
            nodes[top_idx].children[-1] = mid_idx
            stack.append((mid_idx, depth))
            parent = mid_idx
        nodes.append(leaf_for(sa[i], depth))
        nodes[parent].children.append(len(nodes) - 1)

    return _canonicalize(prefix, nodes, 0)


def _canonicalize(prefix: bytes, nodes: list[Node], root: int) -> SuffixSubtree:
    """Renumber nodes into depth-first preorder."""
    ordered: list[Node] = []
    mapping: dict[int, int] = {}
    stack = [root]
    while stack:
        idx = stack.pop()
        mapping[idx] = len(ordered)
        ordered.append(nodes[idx])
        stack.extend(reversed(nodes[idx].children))
    for node in ordered:
        node.children = [mapping[c] for c in node.children]
    return SuffixSubtree(prefix, ordered, 0)


def subtree_to_bytes(tree: SuffixSubtree) -> bytes:
    out = bytearray()
    out += _HEADER.pack(SUBTREE_MAGIC, SUBTREE_VERSION, len(tree.prefix))
    out += tree.prefix
    out += _COUNT.pack(len(tree.nodes))
    for node in tree.nodes:
        out += _NODE_FIXED.pack(node.edge_start, node.edge_len, len(node.children))
        for child in node.children:
            out += _CHILD.pack(child)
        if node.is_leaf:
            out += _LEAF_FLAG.pack(1)
            out += _LEAF_POS.pack(node.leaf_pos)
        else:
            out += _LEAF_FLAG.pack(0)
    return bytes(out)


def serialize_subtree(
    tree: SuffixSubtree,
    sink,
    stats: IoStats | None = None,
    block_size: int | None = None,
) -> int:
    """Write the depth-first node layout; returns bytes written."""
    payload = subtree_to_bytes(tree)
    sink.write(payload)
    if stats is not None and block_size:
        charge_write(stats, len(payload), block_size)
    return len(payload)


def deserialize_subtree(source: bytes | str | Path, name: str = "subtree") -> SuffixSubtree:
    if not isinstance(source, bytes):
        name = str(source)
        path = Path(source)
        if not path.exists():
            raise IndexCorruptError(f"{name}: missing subtree file")
        data = path.read_bytes()
    else:
        data = source
    try:
        magic, version, plen = _HEADER.unpack_from(data, 0)
    except struct.error as exc:
        raise IndexCorruptError(f"{name}: truncated header") from exc
    if magic != SUBTREE_MAGIC:
        raise IndexCorruptError(f"{name}: bad magic {magic!r}")
    if version != SUBTREE_VERSION:
        raise IndexCorruptError(f"{name}: unsupported version {version}")
    off = _HEADER.size
    prefix = data[off : off + plen]
    if len(prefix) != plen:
        raise IndexCorruptError(f"{name}: truncated prefix")
    off += plen
    try:
        (count,) = _COUNT.unpack_from(data, off)
        off += _COUNT.size
        nodes: list[Node] = []
        for _ in range(count):
            edge_start, edge_len, nchildren = _NODE_FIXED.unpack_from(data, off)
            off += _NODE_FIXED.size
            children = [
                _CHILD.unpack_from(data, off + k * _CHILD.size)[0] for k in range(nchildren)
            ]
            if nchildren and off + nchildren * _CHILD.size > len(data):
                raise struct.error("short child list")
            off += nchildren * _CHILD.size
            (flag,) = _LEAF_FLAG.unpack_from(data, off)
            off += _LEAF_FLAG.size
            leaf_pos = None
            if flag:
                (leaf_pos,) = _LEAF_POS.unpack_from(data, off)
                off += _LEAF_POS.size
            nodes.append(Node(edge_start, edge_len, children, leaf_pos))
    except struct.error as exc:
        raise IndexCorruptError(f"{name}: truncated node records") from exc
    if off != len(data):
        raise IndexCorruptError(f"{name}: {len(data) - off} trailing bytes")
    for node in nodes:
        for child in node.children:
            if child >= count:
                raise IndexCorruptError(f"{name}: child index {child} out of range")
    return SuffixSubtree(prefix, nodes, 0)


def iter_index_leaves(
    trie: TopTrie,
    load_subtree: Callable[[TrieLeaf], SuffixSubtree],
    n: int,
) -> Iterator[int]:
    """All suffix positions in lexicographic order: walk the trie leaves in
    symbol order and expand each subtree's in-order leaves inline."""
    for leaf in trie.iter_leaves():
        if leaf.is_direct:
            yield leaf.position(n)
        else:
            yield from load_subtree(leaf).leaf_positions()


@dataclass
class _Match:
    """Where a pattern walk stopped."""

    depth: int
    complete: bool
    trie_node: TrieNode | None = None
    subtree: SuffixSubtree | None = None
    node_index: int | None = None  # node at/under which all matches live


class SuffixIndex:
    """A built index: top trie, subtree files, and the text they point into."""

    def __init__(self, root_dir: str | Path, trie: TopTrie, text: Text, n: int):
        self.root_dir = Path(root_dir)
        self.trie = trie
        self.text = text
        self.n = n

    def load_subtree(self, leaf: TrieLeaf) -> SuffixSubtree:
        return deserialize_subtree(self.root_dir / leaf.file_name)

    def encode_pattern(self, pattern: str | bytes) -> bytes | None:
        """Strings are human representation and go through the text's byte
        map; bytes are taken as canonical symbols verbatim."""
        if isinstance(pattern, str):
            from .text import encode_pattern

            return encode_pattern(pattern, self.text.byte_map)
        return bytes(pattern)

    def iter_leaf_positions(self) -> Iterator[int]:
        return iter_index_leaves(self.trie, self.load_subtree, self.n)

    # -- pattern walk ------------------------------------------------------

    def _walk(self, pattern: bytes) -> _Match:
        node = self.trie.root
        depth = 0
        while depth < len(pattern):
            if node.leaf is not None:
                break
            child = node.children.get(pattern[depth])
            if child is None:
                return _Match(depth, False, trie_node=node)
            node = child
            depth += 1
        if node.leaf is None:
            return _Match(depth, depth == len(pattern), trie_node=node)
        leaf = node.leaf
        if leaf.is_direct:
            # the suffix is exactly the leaf prefix; nothing follows it
            return _Match(depth, depth == len(pattern), trie_node=node)
        subtree = self.load_subtree(leaf)
        return self._walk_subtree(pattern, depth, subtree)

    def _walk_subtree(self, pattern: bytes, depth: int, subtree: SuffixSubtree) -> _Match:
        data = self.text.data
        idx = subtree.root
        root = subtree.nodes[idx]
        if root.edge_len:
            # single-leaf subtree: the root itself spells the rest of the suffix
            label = data[root.edge_start - 1 : root.edge_start - 1 + root.edge_len]
            take = min(len(label), len(pattern) - depth)
            for k in range(take):
                if label[k] != pattern[depth + k]:
                    return _Match(depth + k, False, subtree=subtree, node_index=idx)
            depth += take
            return _Match(depth, depth == len(pattern), subtree=subtree, node_index=idx)
        while True:
            if depth == len(pattern):
                return _Match(depth, True, subtree=subtree, node_index=idx)
            node = subtree.nodes[idx]
            nxt = None
            for child_idx in node.children:
                child = subtree.nodes[child_idx]
                if data[child.edge_start - 1] == pattern[depth]:
                    nxt = child_idx
                    break
            if nxt is None:
                return _Match(depth, False, subtree=subtree, node_index=idx)
            child = subtree.nodes[nxt]
            label = data[child.edge_start - 1 : child.edge_start - 1 + child.edge_len]
            take = min(len(label), len(pattern) - depth)
            for k in range(1, take):
                if label[k] != pattern[depth + k]:
                    # mismatch inside the edge: everything below nxt shares
                    # the matched part
                    return _Match(depth + k, False, subtree=subtree, node_index=nxt)
            depth += take
            if take < len(label):
                # pattern exhausted mid-edge
                return _Match(depth, True, subtree=subtree, node_index=nxt)
            idx = nxt

    # -- collection helpers -------------------------------------------------

    def _trie_positions(self, node: TrieNode) -> Iterator[int]:
        if node.leaf is not None:
            if node.leaf.is_direct:
                yield node.leaf.position(self.n)
            else:
                yield from self.load_subtree(node.leaf).leaf_positions()
            return
        for _, child in node.ordered_children():
            yield from self._trie_positions(child)

    def _first_witness(self, match: _Match) -> int | None:
        if match.subtree is not None:
            return next(match.subtree.iter_leaves(match.node_index), None)
        if match.trie_node is not None:
            return next(self._trie_positions(match.trie_node), None)
        return None

    # -- queries -------------------------------------------------------------

    def exists(self, pattern: str | bytes) -> bool:
        """True iff the pattern occurs in the text; loads at most one subtree."""
        encoded = self.encode_pattern(pattern)
        if encoded is None:
            return False
        if not encoded:
            return True
        return self._walk(encoded).complete

    def locate(self, pattern: str | bytes) -> list[int]:
        """All occurrence positions, ascending."""
        encoded = self.encode_pattern(pattern)
        if encoded is None:
            return []
        if not encoded:
            return list(range(1, self.n + 1))
        match = self._walk(encoded)
        if not match.complete:
            return []
        if match.subtree is not None:
            hits = list(match.subtree.iter_leaves(match.node_index))
        else:
            hits = list(self._trie_positions(match.trie_node))
        return sorted(hits)

    def longest_prefix(self, pattern: str | bytes) -> tuple[int, int | None]:
        """Longest pattern prefix occurring in the text, with one witness."""
        encoded = self.encode_pattern(pattern)
        if encoded is None:
            # an unmappable symbol bounds the match; retry its mappable prefix
            assert isinstance(pattern, str)
            encoded = b""
            for cut in range(len(pattern) - 1, 0, -1):
                enc = self.encode_pattern(pattern[:cut])
                if enc is not None:
                    encoded = enc
                    break
        if not encoded:
            return (0, None)
        match = self._walk(encoded)
        if match.depth == 0:
            return (0, None)
        return (match.depth, self._first_witness(match))


def query_exists(index: SuffixIndex, pattern: str | bytes) -> bool:
    return index.exists(pattern)


def query_locate(index: SuffixIndex, pattern: str | bytes) -> list[int]:
    return index.locate(pattern)


def query_longest_prefix(index: SuffixIndex, pattern: str | bytes) -> tuple[int, int | None]:
    return index.longest_prefix(pattern)
