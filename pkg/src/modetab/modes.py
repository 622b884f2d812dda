"""Mode declarations and the answer-insertion policy they drive.

A declaration like p(all, index, min) is compiled into a mode array that
reorders the arguments into fixed groups: index first, then min/max,
then all, then the single sum-or-last argument, then first. Answers are
stored in that order, which keeps every aggregation decision local to a
subtree of the answer trie: replacing a beaten value only ever touches
nodes at or below the point where the comparison happened.

insert_answer walks the answer trie segment by segment. All reads needed
for a rejection happen before any mutation, so a rejected candidate
leaves the table untouched.
"""

from .errors import EvaluationError, ModeError
from .terms import (
    FLT,
    FUN,
    compare_token_seqs,
    flatten_into,
    is_var_token,
    tokenize,
)
from .tries import TrieNode, append_answer_leaf, invalidate_branch

MODES = ("index", "first", "last", "min", "max", "sum", "all")

_GROUP = {"index": 0, "min": 1, "max": 1, "all": 2, "sum": 3, "last": 3, "first": 4}

# insert_answer outcome kinds
NEW = "new"
ADDED = "added"
REPLACED = "replaced"
REJECTED = "rejected"
SUM_UPDATED = "sum_updated"

__all__ = [
    "MODES",
    "NEW",
    "ADDED",
    "REPLACED",
    "REJECTED",
    "SUM_UPDATED",
    "InsertOutcome",
    "compile_declaration",
    "traditional_modes",
    "build_substitution_array",
    "build_segments",
    "preferable",
    "insert_answer",
]


class InsertOutcome:
    __slots__ = ("kind", "leaf", "invalidated", "total")

    def __init__(self, kind, leaf=None, invalidated=0, total=None):
        self.kind = kind
        self.leaf = leaf
        self.invalidated = invalidated
        self.total = total

    @property
    def changed(self):
        return self.kind != REJECTED

    def __repr__(self):
        return "InsertOutcome(%s, invalidated=%d)" % (self.kind, self.invalidated)


def compile_declaration(name, arity, modes):
    """Reorder declared modes into the fixed group order.

    Returns a tuple of (1-based argument position, mode). The sort is
    stable, so arguments keep their source order within a group.
    """
    if len(modes) != arity:
        raise ModeError(
            "%s/%d declared with %d modes" % (name, arity, len(modes))
        )
    for m in modes:
        if m not in MODES:
            raise ModeError("%s/%d: unknown mode %r" % (name, arity, m))
    singles = sum(1 for m in modes if m in ("sum", "last"))
    if singles > 1:
        raise ModeError(
            "%s/%d: only one argument may use sum or last" % (name, arity)
        )
    entries = [(pos, m) for pos, m in enumerate(modes, start=1)]
    entries.sort(key=lambda e: _GROUP[e[1]])
    return tuple(entries)


def traditional_modes(arity):
    """The mode array of a predicate tabled without modes: all index."""
    return tuple((pos, "index") for pos in range(1, arity + 1))


def build_substitution_array(mode_array, call_args):
    """Per reordered argument, the mode and its count of fresh variables."""
    ordered = [call_args[pos - 1] for pos, _ in mode_array]
    counts = []
    tokenize(ordered, counts=counts)
    return tuple(
        (mode, n, pos) for (pos, mode), n in zip(mode_array, counts)
    )


def build_segments(subst_modes):
    """Compile a substitution array into the insertion walk plan.

    Zero-variable entries are dropped (a bound argument stores nothing)
    and adjacent index/all/first entries merge, which is behaviour
    preserving for those modes. Aggregating entries stay separate: each
    min/max argument is its own decision, applied left to right. Yields
    (mode, first_ordinal, last_ordinal_exclusive, arg_position).
    """
    segments = []
    ordinal = 0
    for mode, n, pos in subst_modes:
        if n == 0:
            continue
        if segments and mode in ("index", "all", "first") and segments[-1][0] == mode:
            prev = segments[-1]
            segments[-1] = (mode, prev[1], ordinal + n, prev[3])
        else:
            segments.append((mode, ordinal, ordinal + n, pos))
        ordinal += n
    return tuple(segments)


def preferable(mode, old, new):
    """Would a min/max argument keep the old value, replace it, or tie?"""
    from .terms import compare_ground

    c = compare_ground(new, old)
    if c == 0:
        return "tie"
    if mode == "min":
        return "replace" if c < 0 else "keep_old"
    if mode == "max":
        return "replace" if c > 0 else "keep_old"
    raise ModeError("preferable applies to min and max, not %r" % mode)


def _grow(frame, node, tokens, start):
    """Create the remaining path below node and chain its leaf."""
    for i in range(start, len(tokens)):
        tok = tokens[i]
        child = TrieNode(tok, node)
        node.children[tok] = child
        node = child
    return append_answer_leaf(frame, node)


def _require_ground(frame, tokens, lo, hi, mode, pos):
    for i in range(lo, hi):
        if is_var_token(tokens[i]):
            raise EvaluationError(
                "%s: argument %d under %s needs a ground value"
                % (frame.name(), pos, mode)
            )


def _numeric(frame, tok, pos):
    if type(tok) is int:
        return tok
    if type(tok) is tuple and tok[0] == FLT:
        return tok[1]
    raise EvaluationError(
        "%s: argument %d under sum needs a number" % (frame.name(), pos)
    )


def insert_answer(frame, subst_terms):
    """Insert one candidate answer, already resolved, into a frame's trie.

    subst_terms holds the binding of each free call variable, listed in
    the order the variables appeared in the reordered call.
    """
    segments = frame.segments
    if segments is None:
        segments = frame.segments = build_segments(frame.subst_modes)
        last = segments[-1] if segments else None
        frame.flat_agg = (
            last is not None
            and (last[0] == "min" or last[0] == "max")
            and last[2] - last[1] == 1
            and (len(segments) == 1 or
                 (len(segments) == 2 and segments[0][0] == "index"))
        )

    if not segments:
        # Fully bound call: the only possible answer is "yes".
        if frame.root.payload is not None:
            return InsertOutcome(REJECTED)
        leaf = append_answer_leaf(frame, frame.root)
        leaf.terms = ()
        return InsertOutcome(NEW, leaf)

    if frame.flat_agg:
        # Index prefix plus one aggregated value: when every term is a
        # plain scalar, each term is one token and ordinals equal
        # positions, so the walk needs no flattening machinery. Anything
        # compound drops to the general path below.
        flat = True
        for t in subst_terms:
            tt = type(t)
            if tt is not str and tt is not int and tt is not float:
                flat = False
                break
        if flat:
            toks = [(FLT, t) if type(t) is float else t for t in subst_terms]
            amode, lo, _hi, _pos = segments[-1]
            node = frame.root
            for i in range(lo):
                child = node.children.get(toks[i])
                if child is None:
                    leaf = _grow(frame, node, toks, i)
                    leaf.terms = tuple(subst_terms)
                    return InsertOutcome(NEW, leaf)
                node = child
            children = node.children
            if not children:
                leaf = _grow(frame, node, toks, lo)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(NEW, leaf)
            snode = next(iter(children.values()))
            stok = snode.token
            if not (type(stok) is tuple and stok[0] == FUN):
                ctok = toks[lo]
                if ctok == stok:
                    return InsertOutcome(REJECTED)
                if type(ctok) is int and type(stok) is int:
                    better = ctok < stok if amode == "min" else ctok > stok
                else:
                    c = compare_token_seqs((ctok,), (stok,))
                    if c == 0:
                        return InsertOutcome(REJECTED)
                    better = c < 0 if amode == "min" else c > 0
                if not better:
                    return InsertOutcome(REJECTED)
                dropped = 0
                for child in list(children.values()):
                    dropped += invalidate_branch(frame, child)
                leaf = _grow(frame, node, toks, lo)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(REPLACED, leaf, invalidated=dropped)
            # stored witness is compound; retry below without shortcuts

    varmap = None
    tokens = []
    offsets = [0]
    for t in subst_terms:
        tt = type(t)
        if tt is str or tt is int:
            tokens.append(t)
        elif tt is float:
            tokens.append((FLT, t))
        else:
            if varmap is None:
                varmap = {}
            flatten_into(t, varmap, tokens)
        offsets.append(len(tokens))
    end = len(tokens)

    # Validate every aggregating argument up front. A divergence in an
    # earlier segment grows the rest of the path without revisiting the
    # deeper segments, so their checks cannot wait until the walk. With
    # no variables anywhere (varmap never materialized) the ground
    # checks have nothing to find.
    sum_value = None
    for mode, lo, hi, pos in segments:
        if mode == "index" or mode == "all":
            continue
        if varmap is not None:
            _require_ground(frame, tokens, offsets[lo], offsets[hi], mode, pos)
        if mode == "sum":
            if hi - lo != 1 or offsets[hi] - offsets[lo] != 1:
                raise EvaluationError(
                    "%s: argument %d under sum must be a single number"
                    % (frame.name(), pos)
                )
            sum_value = _numeric(frame, tokens[offsets[lo]], pos)

    node = frame.root
    for mode, lo, hi, pos in segments:
        t0 = offsets[lo]
        t1 = offsets[hi]

        if mode == "index" or mode == "all":
            i = t0
            while i < t1:
                child = node.children.get(tokens[i])
                if child is None:
                    break
                node = child
                i += 1
            if i < t1:
                kind = ADDED if mode == "all" and node.children else NEW
                leaf = _grow(frame, node, tokens, i)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(kind, leaf, total=sum_value)
            continue

        if mode == "min" or mode == "max":
            children = node.children
            if not children:
                leaf = _grow(frame, node, tokens, t0)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(NEW, leaf, total=sum_value)
            snode = next(iter(children.values()))
            stok = snode.token
            if t1 - t0 == 1 and not (type(stok) is tuple and stok[0] == FUN):
                # single flat token on both sides, the usual case
                ctok = tokens[t0]
                if ctok == stok:
                    node = snode
                    continue
                if type(ctok) is int and type(stok) is int:
                    c = -1 if ctok < stok else 1
                else:
                    c = compare_token_seqs((ctok,), (stok,))
            else:
                # Read the stored witness: walk the (single) live branch
                # until as many complete terms as this segment holds are
                # spelled out.
                stored = [stok]
                pending = hi - lo - 1
                if type(stok) is tuple and stok[0] == FUN:
                    pending += stok[2]
                while pending:
                    snode = next(iter(snode.children.values()))
                    tok = snode.token
                    stored.append(tok)
                    pending -= 1
                    if type(tok) is tuple and tok[0] == FUN:
                        pending += tok[2]
                cand = tokens[t0:t1]
                if cand == stored:
                    node = snode
                    continue
                c = compare_token_seqs(cand, stored)
            if (mode == "min" and c == -1) or (mode == "max" and c == 1):
                dropped = 0
                for child in list(children.values()):
                    dropped += invalidate_branch(frame, child)
                leaf = _grow(frame, node, tokens, t0)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(REPLACED, leaf, invalidated=dropped, total=sum_value)
            # Worse, or numerically tied with a differently typed value:
            # the stored witness stays.
            return InsertOutcome(REJECTED)

        if mode == "sum":
            if not node.children:
                leaf = _grow(frame, node, tokens, t0)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(NEW, leaf, total=sum_value)
            snode = next(iter(node.children.values()))
            total = _numeric(frame, snode.token, pos) + sum_value
            dropped = 0
            for child in list(node.children.values()):
                dropped += invalidate_branch(frame, child)
            tok = (FLT, total) if type(total) is float else total
            new_tokens = tokens[:t0] + [tok] + tokens[t1:]
            leaf = _grow(frame, node, new_tokens, t0)
            leaf.terms = tuple(subst_terms[:lo]) + (total,) + tuple(subst_terms[hi:])
            return InsertOutcome(SUM_UPDATED, leaf, invalidated=dropped, total=total)

        if mode == "last":
            if not node.children:
                leaf = _grow(frame, node, tokens, t0)
                leaf.terms = tuple(subst_terms)
                return InsertOutcome(NEW, leaf)
            dropped = 0
            for child in list(node.children.values()):
                dropped += invalidate_branch(frame, child)
            leaf = _grow(frame, node, tokens, t0)
            leaf.terms = tuple(subst_terms)
            return InsertOutcome(REPLACED, leaf, invalidated=dropped)

        # first: keep whatever arrived first, without reading deeper
        if node.children:
            return InsertOutcome(REJECTED)
        leaf = _grow(frame, node, tokens, t0)
        leaf.terms = tuple(subst_terms)
        return InsertOutcome(NEW, leaf)

    # Every segment matched an existing path: exact duplicate.
    assert end == 0 or node.payload is not None
    return InsertOutcome(REJECTED)
