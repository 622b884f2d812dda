"""Tabled resolution over the mode-directed table space.

The engine walks clause bodies depth first. A call to a tabled
predicate either starts a generator (first call), reads a completed
table inline, or suspends: the remaining goals and the answer template
are resolved against the current bindings and parked as a consumer.
How stored answers reach consumers depends on the frame's scheduling
strategy:

* batched: every table-changing insertion is pushed to all registered
  consumers right away, plus a bounded catch-up walk at registration
  time. Consumers may observe answers that a later insertion
  invalidates.
* local: consumers get nothing until the task queue drains. The
  dependency graph of incomplete subgoals is then condensed into
  strongly connected components; in a component with no outgoing
  dependencies, consumers inside it are walked along the answer chain
  to a fixpoint, the component completes, and only the surviving
  answers are released to outside callers.
"""

from collections import deque

from .errors import DerivationLimitError, EvaluationError
from .lang import decompose_goal, eval_arith, eval_builtin, is_builtin, parse_query
from .modes import REJECTED, compile_declaration, insert_answer, traditional_modes
from .terms import Struct, Var, instantiate, resolve, term_to_str, unify
from .tries import complete_table, iterate_answers, subgoal_lookup_insert, TableSpace

__all__ = ["Engine", "Stats", "solve", "DEFAULT_LIMIT"]

DEFAULT_LIMIT = 5_000_000

# goal dispatch kinds, cached per predicate
_BUILTIN, _TABLED, _FACTS, _RULES, _UNKNOWN = 0, 1, 2, 3, 4


class Stats:
    __slots__ = (
        "derivations",
        "insertions",
        "invalidations",
        "propagations",
        "resumptions",
    )

    def __init__(self):
        self.derivations = 0
        self.insertions = 0
        self.invalidations = 0
        self.propagations = 0
        self.resumptions = 0

    def as_dict(self):
        return {
            "derivations": self.derivations,
            "insertions": self.insertions,
            "invalidations": self.invalidations,
            "propagations": self.propagations,
            "resumptions": self.resumptions,
        }

    def __repr__(self):
        return "Stats(%s)" % ", ".join(
            "%s=%d" % kv for kv in sorted(self.as_dict().items())
        )


class Consumer:
    """A suspended tabled call: where it reads and how to go on.

    plan maps answer ordinals to the variables of the call. rest and
    outs are the remaining goals and the caller's answer template,
    resolved at suspension time so that bindings made before the
    suspension survive; variables still unbound then are bound anew by
    each delivered answer.
    """

    __slots__ = ("frame", "host", "plan", "rest", "outs", "fn", "last", "cid")

    def __init__(self, frame, host, plan, rest, outs, fn, cid):
        self.frame = frame
        self.host = host  # frame whose evaluation this call sits in, or None
        self.plan = plan  # tuple of (variable, answer ordinal)
        self.rest = rest
        self.outs = outs
        self.fn = fn
        self.last = None  # chain position for walk-style delivery
        self.cid = cid


class Generator:
    __slots__ = ("frame", "call_args", "subst_vars")

    def __init__(self, frame, call_args, subst_vars):
        self.frame = frame
        self.call_args = call_args
        self.subst_vars = subst_vars


class Engine:
    def __init__(self, program, strategy="local", limit=DEFAULT_LIMIT, trace=False):
        if strategy not in ("local", "batched"):
            raise ValueError("strategy must be 'local' or 'batched'")
        self.program = program
        self.strategy = strategy
        self.limit = limit
        self.stats = Stats()
        self.events = [] if trace else None
        self.space = TableSpace()
        self.tasks = deque()
        self.incomplete = []
        self._entries = {}
        self._clause_vars = {}
        self._facts = {}
        self._dispatch = {}
        self._next_cid = 0

    # -- bookkeeping ---------------------------------------------------

    def _log(self, kind, **fields):
        if self.events is not None:
            fields["kind"] = kind
            self.events.append(fields)

    def entry(self, name, arity):
        key = (name, arity)
        found = self._entries.get(key)
        if found is None:
            modes = self.program.table_modes(name, arity)
            if modes is None:
                array = traditional_modes(arity)
            else:
                array = compile_declaration(name, arity, list(modes))
            found = self._entries[key] = self.space.entry(name, arity, array)
        return found

    def frame_strategy(self, name, arity):
        return self.program.strategy_overrides.get((name, arity), self.strategy)

    # -- resolution ----------------------------------------------------

    def _vars_of(self, clause):
        seen = self._clause_vars.get(id(clause))
        if seen is None:
            seen = []
            stack = [clause.head]
            stack.extend(clause.body)
            while stack:
                t = stack.pop()
                if type(t) is Var:
                    if t not in seen:
                        seen.append(t)
                elif type(t) is Struct:
                    stack.extend(t.args)
            seen = self._clause_vars[id(clause)] = tuple(seen)
        return seen

    def _clause_copy(self, clause):
        seen = self._vars_of(clause)
        if not seen:
            return clause.head, clause.body
        mapping = {v: Var() for v in seen}
        head = instantiate(clause.head, mapping)
        body = tuple(instantiate(g, mapping) for g in clause.body)
        return head, body

    def _fact_info(self, name, arity):
        """First-argument index for predicates made of ground facts only."""
        key = (name, arity)
        info = self._facts.get(key)
        if info is None:
            rows = []
            for clause in self.program.clauses_for(name, arity):
                if clause.body or self._vars_of(clause):
                    rows = None
                    break
                rows.append(clause.head.args if type(clause.head) is Struct else ())
            if rows is None or not arity:
                info = False
            else:
                index = {}
                for args in rows:
                    index.setdefault(_index_key(args[0]), []).append(args)
                info = (rows, index)
            self._facts[key] = info
        return info

    def _classify(self, name, arity):
        """Cache how calls to one predicate are handled."""
        if is_builtin(name, arity):
            d = (_BUILTIN,)
        elif self.program.is_tabled(name, arity):
            d = (_TABLED,)
        elif not self.program.clauses_for(name, arity):
            d = (_UNKNOWN,)
        else:
            info = self._fact_info(name, arity)
            if info:
                d = (_FACTS, info[0], info[1])
            else:
                d = (_RULES, self.program.clauses_for(name, arity))
        self._dispatch[(name, arity)] = d
        return d

    def _walk(self, goals, i, env, fn, outs, host):
        """Solve goals[i:] under env; apply fn to the resolved template.

        goals is a tuple; everything here runs once per derivation step,
        so bindings are made and undone inline instead of through the
        helpers in terms.
        """
        if i == len(goals):
            vals = []
            for t in outs:
                while type(t) is Var:
                    b = env.get(t)
                    if b is None:
                        break
                    t = b
                if type(t) is Struct:
                    t = resolve(t, env)
                vals.append(t)
            fn(tuple(vals))
            return
        goal = goals[i]
        tg = type(goal)
        while tg is Var:
            goal = env.get(goal)
            if goal is None:
                raise EvaluationError("unbound variable used as a goal")
            tg = type(goal)
        if tg is Struct:
            name = goal.name
            args = goal.args
        elif tg is str:
            name = goal
            args = ()
        else:
            raise EvaluationError("goal is not callable: %s" % term_to_str(goal))
        arity = len(args)
        d = self._dispatch.get((name, arity))
        if d is None:
            d = self._classify(name, arity)
        kind = d[0]
        st = self.stats
        limit = self.limit

        if kind == _BUILTIN:
            st.derivations += 1
            if st.derivations > limit:
                raise DerivationLimitError(
                    "derivation limit of %d exceeded" % limit
                )
            if name == "is":
                val = eval_arith(args[1], env)
                a0 = args[0]
                while type(a0) is Var:
                    b = env.get(a0)
                    if b is None:
                        break
                    a0 = b
                if type(a0) is Var:
                    env[a0] = val
                    self._walk(goals, i + 1, env, fn, outs, host)
                    del env[a0]
                elif type(a0) is type(val) and a0 == val:
                    self._walk(goals, i + 1, env, fn, outs, host)
                return
            trail = []
            if eval_builtin(name, args, env, trail):
                self._walk(goals, i + 1, env, fn, outs, host)
            for v in trail:
                del env[v]
            return

        if kind == _TABLED:
            self._call_tabled(name, args, goals, i, env, fn, outs, host)
            return

        if kind == _FACTS:
            rows, index = d[1], d[2]
            dargs = []
            for a in args:
                while type(a) is Var:
                    b = env.get(a)
                    if b is None:
                        break
                    a = b
                dargs.append(a)
            a0 = dargs[0]
            t0 = type(a0)
            if t0 is Var:
                candidates = rows
                start = 0
            elif t0 is Struct:
                candidates = index.get(("s", a0.name, len(a0.args)), ())
                start = 0
            else:
                # the index key is type strict, so the first argument of
                # every candidate already matches
                candidates = index.get((t0.__name__, a0), ())
                start = 1
            if not candidates:
                return
            nxt = i + 1
            fresh = None
            for k in range(start, arity):
                a = dargs[k]
                if type(a) is not Var or a in dargs[start:k]:
                    fresh = False
                    break
            if fresh is None and start < arity:
                # every open position is a distinct unbound variable:
                # bind positionally, no trail needed
                fresh = [(k, dargs[k]) for k in range(start, arity)]
                for fact_args in candidates:
                    st.derivations += 1
                    if st.derivations > limit:
                        raise DerivationLimitError(
                            "derivation limit of %d exceeded" % limit
                        )
                    for k, v in fresh:
                        env[v] = fact_args[k]
                    self._walk(goals, nxt, env, fn, outs, host)
                for _, v in fresh:
                    del env[v]
                return
            trail = []
            for fact_args in candidates:
                st.derivations += 1
                if st.derivations > limit:
                    raise DerivationLimitError(
                        "derivation limit of %d exceeded" % limit
                    )
                ok = True
                for k in range(start, arity):
                    a = dargs[k]
                    fa = fact_args[k]
                    if a is fa:
                        continue
                    ta = type(a)
                    if ta is Var:
                        b = env.get(a)
                        if b is None:
                            env[a] = fa
                            trail.append(a)
                            continue
                        a = b
                        if a is fa:
                            continue
                        ta = type(a)
                    if ta is Struct:
                        if unify(a, fa, env, trail):
                            continue
                    elif ta is type(fa) and a == fa:
                        continue
                    ok = False
                    break
                if ok:
                    self._walk(goals, nxt, env, fn, outs, host)
                if trail:
                    for v in trail:
                        del env[v]
                    trail.clear()
            return

        if kind == _UNKNOWN:
            raise EvaluationError("unknown predicate %s/%d" % (name, arity))

        tail = goals[i + 1 :]
        trail = []
        for clause in d[1]:
            st.derivations += 1
            if st.derivations > limit:
                raise DerivationLimitError(
                    "derivation limit of %d exceeded" % limit
                )
            head, body = self._clause_copy(clause)
            head_args = head.args if type(head) is Struct else ()
            ok = True
            for a, ha in zip(args, head_args):
                if not unify(a, ha, env, trail):
                    ok = False
                    break
            if ok:
                self._walk(body + tail, 0, env, fn, outs, host)
            if trail:
                for v in trail:
                    del env[v]
                trail.clear()

    # -- tabled calls ----------------------------------------------------

    def _materialize(self, name, args, env):
        """Find or create the frame for a call; start its generator if new."""
        entry = self.entry(name, len(args))
        call_args = []
        for a in args:
            while type(a) is Var:
                b = env.get(a)
                if b is None:
                    break
                a = b
            if type(a) is Struct:
                a = resolve(a, env)
            call_args.append(a)
        frame, is_new, varmap = subgoal_lookup_insert(entry, call_args)
        if is_new:
            frame.strategy = self.frame_strategy(name, len(args))
            # ordinals are handed out at first occurrence, so the map is
            # already in ordinal order
            subst_vars = tuple(varmap)
            frame.answer_vars = subst_vars
            frame.generator = Generator(frame, call_args, subst_vars)
            self.incomplete.append(frame)
            self.tasks.append(("gen", frame))
            if self.events is not None:
                self._log("call", frame=frame.name(), new=True)
        return frame, varmap

    def _call_tabled(self, name, args, goals, i, env, fn, outs, host):
        frame, varmap = self._materialize(name, args, env)
        plan = tuple(varmap.items())
        if frame.state == "complete":
            # completed tables behave like memoized lookups
            st = self.stats
            nxt = i + 1
            leaf = frame.first_answer
            bound = False
            while leaf is not None:
                if leaf.valid:
                    st.propagations += 1
                    terms = leaf.terms
                    for var, o in plan:
                        env[var] = terms[o]
                    bound = True
                    self._walk(goals, nxt, env, fn, outs, host)
                leaf = leaf.next
            if bound:
                for var, _ in plan:
                    del env[var]
            return
        rest = tuple(resolve(g, env) for g in goals[i + 1 :])
        snap = tuple(resolve(t, env) for t in outs)
        self._next_cid += 1
        consumer = Consumer(frame, host, plan, rest, snap, fn, self._next_cid)
        frame.consumers.append(consumer)
        if frame.strategy == "batched":
            # catch up on answers stored before registration; later ones
            # arrive as insertion events, so the walk is bounded to keep
            # the two channels from overlapping
            bound = frame.seq_counter
            for leaf in iterate_answers(frame):
                if leaf.seq > bound:
                    break
                consumer.last = leaf
                self._deliver(consumer, leaf, resumed=False)

    def _deliver(self, consumer, leaf, resumed):
        st = self.stats
        st.propagations += 1
        if resumed:
            st.resumptions += 1
        if self.events is not None:
            self._log(
                "deliver",
                frame=consumer.frame.name(),
                seq=leaf.seq,
                consumer=consumer.cid,
                host=consumer.host.name() if consumer.host is not None else None,
                complete=consumer.frame.complete,
                resumed=resumed,
            )
        terms = leaf.terms
        env = {}
        for var, o in consumer.plan:
            env[var] = terms[o]
        self._walk(consumer.rest, 0, env, consumer.fn, consumer.outs,
                   consumer.host)

    def _insert(self, frame, subst):
        outcome = insert_answer(frame, subst)
        st = self.stats
        st.insertions += 1
        if outcome.invalidated:
            st.invalidations += outcome.invalidated
        if self.events is not None:
            self._log(
                "insert",
                frame=frame.name(),
                outcome=outcome.kind,
                invalidated=outcome.invalidated,
                seq=outcome.leaf.seq if outcome.leaf is not None else None,
                total=outcome.total,
            )
        if outcome.kind != REJECTED and frame.strategy == "batched":
            leaf = outcome.leaf
            tasks = self.tasks
            for consumer in frame.consumers:
                tasks.append(("event", consumer, leaf))
        return outcome

    # -- task loop -------------------------------------------------------

    def _run_generator(self, frame):
        gen = frame.generator

        def fn(subst):
            self._insert(frame, subst)

        name, arity = frame.entry.name, frame.entry.arity
        st = self.stats
        limit = self.limit
        for clause in self.program.clauses_for(name, arity):
            st.derivations += 1
            if st.derivations > limit:
                raise DerivationLimitError(
                    "derivation limit of %d exceeded" % limit
                )
            head, body = self._clause_copy(clause)
            head_args = head.args if type(head) is Struct else ()
            env = {}
            ok = True
            for ca, ha in zip(gen.call_args, head_args):
                if not unify(ca, ha, env, []):
                    ok = False
                    break
            if ok:
                self._walk(body, 0, env, fn, gen.subst_vars, frame)

    def _walk_consumer(self, consumer):
        frame = consumer.frame
        leaf = frame.first_answer if consumer.last is None else consumer.last.next
        while leaf is not None:
            if leaf.valid:
                consumer.last = leaf
                self._deliver(consumer, leaf, resumed=True)
                leaf = consumer.last.next
            else:
                leaf = leaf.next

    def run(self):
        while True:
            while self.tasks:
                task = self.tasks.popleft()
                kind = task[0]
                if kind == "gen":
                    self._run_generator(task[1])
                elif kind == "event":
                    self._deliver(task[1], task[2], resumed=True)
                else:  # walk
                    self._walk_consumer(task[1])
            if not self._checkpoint():
                return

    # -- completion -------------------------------------------------------

    def _checkpoint(self):
        """Queue is empty: walk or complete bottom components.

        Returns True when new tasks were scheduled, False at the global
        fixpoint. A component may complete only when no frame in it
        waits on answers from outside it, so bottomness is judged on
        outgoing dependency edges.
        """
        while self.incomplete:
            adj = {frame: [] for frame in self.incomplete}
            for frame in self.incomplete:
                for consumer in frame.consumers:
                    host = consumer.host
                    if host is not None and host is not frame and host in adj:
                        adj[host].append(frame)
            sccs = _tarjan(self.incomplete, adj)
            ids = {}
            for n, scc in enumerate(sccs):
                for frame in scc:
                    ids[frame] = n
            pushed = False
            completed = False
            for n, scc in enumerate(sccs):
                if any(ids[succ] != n for frame in scc for succ in adj[frame]):
                    continue  # still waits on another incomplete component
                members = set(scc)
                walkers = [
                    consumer
                    for frame in scc
                    if frame.strategy == "local"
                    for consumer in frame.consumers
                    if consumer.host in members
                    and _next_valid(frame, consumer.last) is not None
                ]
                if walkers:
                    for consumer in walkers:
                        self.tasks.append(("walk", consumer))
                    pushed = True
                    continue
                for frame in scc:
                    complete_table(frame)
                    self.incomplete.remove(frame)
                    completed = True
                    self._log("complete", frame=frame.name())
                for frame in scc:
                    if frame.strategy != "local":
                        continue
                    for consumer in frame.consumers:
                        if consumer.host in members:
                            continue
                        if _next_valid(frame, consumer.last) is not None:
                            self.tasks.append(("walk", consumer))
                            pushed = True
            if pushed:
                return True
            if not completed:
                return False
        return False

    # -- queries -----------------------------------------------------------

    def solve(self, query):
        """Evaluate a query (text or goal list); returns (answers, stats).

        Each answer maps variable names to terms, in first-occurrence
        order. A query made of a single tabled goal reports the final
        content of the completed table, in chain order.
        """
        goals = tuple(parse_query(query) if isinstance(query, str) else query)
        qvars = _query_vars(goals)
        names = tuple(v.name for v in qvars)
        if len(goals) == 1:
            name, args = decompose_goal(goals[0], {})
            if not is_builtin(name, len(args)) and self.program.is_tabled(
                name, len(args)
            ):
                frame, varmap = self._materialize(name, args, {})
                self.run()
                plan = tuple(varmap.items())
                answers = []
                for leaf in iterate_answers(frame):
                    env = {var: leaf.terms[o] for var, o in plan}
                    answers.append({v.name: resolve(v, env) for v in qvars})
                return answers, self.stats
        answers = []
        self._walk(
            goals, 0, {},
            lambda vals: answers.append(dict(zip(names, vals))),
            qvars, None,
        )
        self.run()
        return answers, self.stats

    def table_answers(self, name, arity):
        """Valid answer tuples of every frame of a predicate, by call key."""
        entry = self._entries.get((name, arity))
        if entry is None:
            return {}
        out = {}
        for frame in entry.frames:
            out[tuple(frame.call_tokens)] = [
                leaf.terms for leaf in iterate_answers(frame)
            ]
        return out


def _tarjan(nodes, adj):
    """Strongly connected components, iteratively; sinks come out first."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, pi = work.pop()
            if pi == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            deeper = False
            edges = adj[node]
            while pi < len(edges):
                succ = edges[pi]
                pi += 1
                if succ not in index:
                    work.append((node, pi))
                    work.append((succ, 0))
                    deeper = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if deeper:
                continue
            if low[node] == index[node]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member is node:
                        break
                sccs.append(scc)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def _next_valid(frame, after):
    leaf = frame.first_answer if after is None else after.next
    while leaf is not None and not leaf.valid:
        leaf = leaf.next
    return leaf


def _index_key(t):
    tt = type(t)
    if tt is Var:
        return None
    if tt is Struct:
        return ("s", t.name, len(t.args))
    return (tt.__name__, t)


def _query_vars(goals):
    seen = []
    stack = list(reversed(goals))
    while stack:
        t = stack.pop()
        if type(t) is Var:
            if t.name != "_" and t not in seen:
                seen.append(t)
        elif type(t) is Struct:
            stack.extend(reversed(t.args))
    return tuple(seen)


def solve(program, query, strategy="local", limit=DEFAULT_LIMIT, trace=False):
    """One-shot evaluation; see Engine.solve."""
    engine = Engine(program, strategy, limit, trace)
    answers, stats = engine.solve(query)
    return answers, stats
