"""The table space: tries of calls and answers with invalidatable leaf chains.

Each tabled predicate owns a TableEntry whose call trie maps one path per
variant call to a SubgoalFrame. Every frame owns an answer trie holding
only the substitution terms of the call's free variables; answer leaves
are chained in insertion order so readers can pick up new answers by
following a single pointer.

Superseding an answer detaches its branch from the trie root (making it
invisible to fresh lookups) and tags its leaves invalid, but the leaves
stay on the chain, still pointing at their old parents, so a reader
parked on a dead leaf can keep walking. Dead leaves are only dropped
when the table completes.
"""

from .errors import ModetabError
from .terms import decode_tokens, token_to_str, tokenize

__all__ = [
    "TrieNode",
    "AnswerLeaf",
    "SubgoalFrame",
    "TableEntry",
    "TableSpace",
    "trie_insert",
    "subgoal_lookup_insert",
    "append_answer_leaf",
    "answer_terms",
    "invalidate_branch",
    "complete_table",
    "iterate_answers",
    "dump_answers",
]


class TrieNode:
    __slots__ = ("token", "parent", "children", "payload")

    def __init__(self, token, parent):
        self.token = token
        self.parent = parent
        self.children = {}
        self.payload = None  # SubgoalFrame on call-trie leaves, AnswerLeaf on answer-trie leaves


class AnswerLeaf:
    """Chain record for one stored answer."""

    __slots__ = ("node", "next", "valid", "seq", "terms")

    def __init__(self, node, seq):
        self.node = node
        self.next = None
        self.valid = True
        self.seq = seq
        self.terms = None  # decoded substitution vector, filled lazily


class SubgoalFrame:
    """Per-variant-call record anchoring the answer trie and its chain."""

    __slots__ = (
        "entry",
        "call_tokens",
        "subst_modes",
        "segments",
        "flat_agg",
        "root",
        "first_answer",
        "last_answer",
        "state",
        "strategy",
        "generator",
        "consumers",
        "answer_vars",
        "seq_counter",
        "n_inserted",
        "n_invalidated",
        "n_purged",
    )

    def __init__(self, entry, call_tokens, subst_modes):
        self.entry = entry
        self.call_tokens = call_tokens
        self.subst_modes = subst_modes  # tuple of (mode, var_count, arg_position)
        self.segments = None  # insertion plan, compiled on first insert
        self.flat_agg = None  # plan is index prefix + one min/max value
        self.root = TrieNode(None, None)
        self.first_answer = None
        self.last_answer = None
        self.state = "incomplete"
        self.strategy = None
        self.generator = None
        self.consumers = []
        self.answer_vars = None
        self.seq_counter = 0
        self.n_inserted = 0
        self.n_invalidated = 0
        self.n_purged = 0

    @property
    def complete(self):
        return self.state == "complete"

    def name(self):
        return "%s/%d" % (self.entry.name, self.entry.arity)


class TableEntry:
    """One per tabled predicate: its mode array and the trie of calls."""

    __slots__ = ("name", "arity", "mode_array", "root", "frames")

    def __init__(self, name, arity, mode_array):
        self.name = name
        self.arity = arity
        self.mode_array = mode_array  # tuple of (1-based position, mode)
        self.root = TrieNode(None, None)
        self.frames = []


class TableSpace:
    def __init__(self):
        self.entries = {}

    def entry(self, name, arity, mode_array):
        key = (name, arity)
        e = self.entries.get(key)
        if e is None:
            e = TableEntry(name, arity, mode_array)
            self.entries[key] = e
        return e

    def abolish(self, name, arity):
        """Drop a predicate's table wholesale."""
        self.entries.pop((name, arity), None)


def trie_insert(root, tokens):
    """Ensure a path for tokens exists; returns (leaf, existed)."""
    node = root
    existed = True
    for tok in tokens:
        child = node.children.get(tok)
        if child is None:
            existed = False
            child = TrieNode(tok, node)
            node.children[tok] = child
        node = child
    return node, existed


def subgoal_lookup_insert(entry, call_args):
    """Find or create the frame for a call, reordering arguments by mode.

    Arguments are tokenized in mode-array order, so variant calls land on
    the same path no matter how their variables are named. Returns
    (frame, is_new, varmap) where varmap gives each unbound variable of
    call_args its ordinal in the answer substitution vector.
    """
    ordered = [call_args[pos - 1] for pos, _mode in entry.mode_array]
    varmap = {}
    counts = []
    tokens = tokenize(ordered, varmap, counts)
    leaf, _ = trie_insert(entry.root, tokens)
    frame = leaf.payload
    is_new = frame is None
    if is_new:
        subst = tuple(
            (mode, n, pos)
            for (pos, mode), n in zip(entry.mode_array, counts)
        )
        frame = SubgoalFrame(entry, tokens, subst)
        leaf.payload = frame
        entry.frames.append(frame)
    return frame, is_new, varmap


def append_answer_leaf(frame, node):
    """Chain a freshly created answer leaf at the tail."""
    if node.payload is not None:
        raise ModetabError("answer leaf is already chained")
    frame.seq_counter += 1
    leaf = AnswerLeaf(node, frame.seq_counter)
    node.payload = leaf
    if frame.last_answer is None:
        frame.first_answer = leaf
    else:
        frame.last_answer.next = leaf
    frame.last_answer = leaf
    frame.n_inserted += 1
    return leaf


def answer_terms(leaf):
    """The decoded substitution vector of a leaf, cached after first use."""
    if leaf.terms is None:
        tokens = []
        node = leaf.node
        while node.parent is not None:
            tokens.append(node.token)
            node = node.parent
        tokens.reverse()
        leaf.terms = tuple(decode_tokens(tokens))
    return leaf.terms


def invalidate_branch(frame, node):
    """Detach one answer branch and tag its leaves invalid.

    The branch top is unlinked from its parent so root-down lookups no
    longer see it; leaves keep their parent pointers and chain links so
    lagging readers can still walk past them. Returns the number of
    leaves tagged.
    """
    if frame.state != "incomplete":
        raise ModetabError("cannot invalidate answers of a completed table")
    if node.parent is None:
        raise ModetabError("refusing to invalidate a trie root")
    # The node must hang off this frame's root through live links only;
    # anything already detached, and anything from another trie, is out.
    top = node
    while top.parent is not None:
        if top.parent.children.get(top.token) is not top:
            raise ModetabError("node is not a live branch of this answer trie")
        top = top.parent
    if top is not frame.root:
        raise ModetabError("node is not a live branch of this answer trie")
    del node.parent.children[node.token]
    tagged = 0
    stack = [node]
    while stack:
        n = stack.pop()
        leaf = n.payload
        if leaf is not None:
            leaf.valid = False
            tagged += 1
        else:
            stack.extend(n.children.values())
    frame.n_invalidated += tagged
    return tagged


def complete_table(frame):
    """Purge invalid leaves from the chain and freeze the table.

    Purged leaves keep their old forward pointers, so a reader parked on
    one still reaches the surviving suffix of the chain.
    """
    if frame.state == "complete":
        raise ModetabError("table %s completed twice" % frame.name())
    survivors = []
    cur = frame.first_answer
    while cur is not None:
        if cur.valid:
            survivors.append(cur)
        else:
            frame.n_purged += 1
        cur = cur.next
    for i, leaf in enumerate(survivors):
        leaf.next = survivors[i + 1] if i + 1 < len(survivors) else None
    frame.first_answer = survivors[0] if survivors else None
    frame.last_answer = survivors[-1] if survivors else None
    frame.state = "complete"
    frame.generator = None


def iterate_answers(frame, after=None):
    """Yield valid leaves in chain order, starting after the given leaf."""
    leaf = frame.first_answer if after is None else after.next
    while leaf is not None:
        if leaf.valid:
            yield leaf
        leaf = leaf.next


def dump_answers(frame):
    """Debug view: one line per chained answer, in insertion order."""
    lines = []
    cur = frame.first_answer
    while cur is not None:
        tokens = []
        node = cur.node
        while node.parent is not None:
            tokens.append(node.token)
            node = node.parent
        tokens.reverse()
        text = " ".join(token_to_str(t) for t in tokens) or "<yes>"
        lines.append("%s [%s]" % (text, "valid" if cur.valid else "invalid"))
        cur = cur.next
    return lines
