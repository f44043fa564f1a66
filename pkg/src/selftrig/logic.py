"""Temporal objectives: parsing, three-valued evaluation, parity compilation.

The objective language is boolean combinations of four temporal shapes over
state formulas: F (eventually), G (always), GF (infinitely often), FG
(eventually always).  State formulas are evaluated three-valued against
certificate pairs (P+, P-): an atom is true when certified, false when
refuted, unknown otherwise; unknown never counts as satisfaction, so every
approximation error works against the controller.

A compiled objective is a deterministic parity annotation: a finite set of
copies with colors and a jump function driven by per-transition satisfaction
bits.  Single temporal operators use the standard two-copy encodings.
Boolean combinations build the Zielonka tree of the combined acceptance
condition over tuples of operand colors and run its leaf automaton; the
emitted priority is recorded in the copy so that colors stay a function of
the annotation state.
"""

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Union

from .errors import ConfigError

# ---------------------------------------------------------------------------
# AST

class SVal:
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class STrue:
    def atoms(self):
        return frozenset()

    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Atom:
    name: str

    def atoms(self):
        return frozenset([self.name])

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not:
    arg: object

    def atoms(self):
        return self.arg.atoms()

    def __str__(self):
        return "!%s" % _paren(self.arg)


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def atoms(self):
        return self.left.atoms() | self.right.atoms()

    def __str__(self):
        return "%s || %s" % (_paren(self.left), _paren(self.right))


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def atoms(self):
        return self.left.atoms() | self.right.atoms()

    def __str__(self):
        return "%s && %s" % (_paren(self.left), _paren(self.right))


def _paren(f):
    if isinstance(f, (Or, And)):
        return "(%s)" % f
    return str(f)


StateFormula = Union[STrue, Atom, Not, Or, And]

TEMPORAL_OPS = ("FG", "GF", "F", "G")  # longest match first


@dataclass(frozen=True)
class Temporal:
    op: str  # F | G | GF | FG
    arg: object  # StateFormula

    def atoms(self):
        return self.arg.atoms()

    def bases(self):
        return [self]

    def __str__(self):
        return "%s %s" % (self.op, _paren_state(self.arg))


@dataclass(frozen=True)
class PathOr:
    left: object
    right: object

    def atoms(self):
        return self.left.atoms() | self.right.atoms()

    def bases(self):
        return self.left.bases() + self.right.bases()

    def __str__(self):
        return "(%s) || (%s)" % (self.left, self.right)


@dataclass(frozen=True)
class PathAnd:
    left: object
    right: object

    def atoms(self):
        return self.left.atoms() | self.right.atoms()

    def bases(self):
        return self.left.bases() + self.right.bases()

    def __str__(self):
        return "(%s) && (%s)" % (self.left, self.right)


def _paren_state(f):
    if isinstance(f, (Or, And, Not)):
        return "(%s)" % f
    return str(f)


PathFormula = Union[Temporal, PathOr, PathAnd]


# ---------------------------------------------------------------------------
# parser

class _Tokens:
    def __init__(self, text):
        self.text = text
        self.toks = []  # (kind, value, pos)
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch == "(":
                self.toks.append(("lpar", ch, i)); i += 1
            elif ch == ")":
                self.toks.append(("rpar", ch, i)); i += 1
            elif ch == "!":
                self.toks.append(("not", ch, i)); i += 1
            elif text.startswith("&&", i):
                self.toks.append(("and", "&&", i)); i += 2
            elif text.startswith("||", i):
                self.toks.append(("or", "||", i)); i += 2
            elif ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                if word in TEMPORAL_OPS:
                    self.toks.append(("temporal", word, i))
                elif word == "true":
                    self.toks.append(("true", word, i))
                else:
                    self.toks.append(("ident", word, i))
                i = j
            else:
                raise ConfigError("unexpected character %r at position %d" % (ch, i))
        self.pos = 0

    def peek(self):
        if self.pos < len(self.toks):
            return self.toks[self.pos]
        return ("eof", "", len(self.text))

    def next(self):
        t = self.peek()
        self.pos += 1
        return t


def _err(tok, msg):
    return ConfigError("%s at position %d" % (msg, tok[2]))


def _parse_state_unary(ts: _Tokens):
    kind, val, pos = ts.peek()
    if kind == "not":
        ts.next()
        return Not(_parse_state_unary(ts))
    if kind == "lpar":
        ts.next()
        f = _parse_state_or(ts)
        if ts.peek()[0] != "rpar":
            raise _err(ts.peek(), "expected ')'")
        ts.next()
        return f
    if kind == "true":
        ts.next()
        return STrue()
    if kind == "ident":
        ts.next()
        return Atom(val)
    if kind == "temporal":
        raise _err(ts.peek(),
                   "temporal operator %r nested inside a state formula" % val)
    raise _err(ts.peek(), "expected a state formula")


def _parse_state_and(ts):
    f = _parse_state_unary(ts)
    while ts.peek()[0] == "and":
        ts.next()
        f = And(f, _parse_state_unary(ts))
    return f


def _parse_state_or(ts):
    f = _parse_state_and(ts)
    while ts.peek()[0] == "or":
        ts.next()
        f = Or(f, _parse_state_and(ts))
    return f


def _parse_path_atom(ts: _Tokens):
    kind, val, pos = ts.peek()
    if kind == "temporal":
        ts.next()
        return Temporal(val, _parse_state_unary(ts))
    if kind == "lpar":
        ts.next()
        f = _parse_path_or(ts)
        if ts.peek()[0] != "rpar":
            raise _err(ts.peek(), "expected ')'")
        ts.next()
        return f
    if kind in ("ident", "true", "not"):
        raise _err(ts.peek(),
                   "state formula without a temporal operator at the path level")
    raise _err(ts.peek(), "expected F, G, GF, FG or '('")


def _parse_path_and(ts):
    f = _parse_path_atom(ts)
    while ts.peek()[0] == "and":
        ts.next()
        f = PathAnd(f, _parse_path_atom(ts))
    return f


def _parse_path_or(ts):
    f = _parse_path_and(ts)
    while ts.peek()[0] == "or":
        ts.next()
        f = PathOr(f, _parse_path_and(ts))
    return f


def parse_spec(text: str) -> PathFormula:
    """Parse an objective; `&&` binds tighter than `||`, no temporal nesting."""
    ts = _Tokens(text)
    f = _parse_path_or(ts)
    if ts.peek()[0] != "eof":
        raise _err(ts.peek(), "trailing input")
    return f


def parse_state(text: str) -> StateFormula:
    """Parse a bare state formula (no temporal operators)."""
    ts = _Tokens(text)
    f = _parse_state_or(ts)
    if ts.peek()[0] != "eof":
        raise _err(ts.peek(), "trailing input")
    return f


def check_atoms(formula, known):
    missing = sorted(formula.atoms() - set(known))
    if missing:
        raise ConfigError("unknown atomic propositions: %s" % ", ".join(missing))


# ---------------------------------------------------------------------------
# three-valued evaluation

def eval_three_valued(phi, pair, known=None):
    """Strong-Kleene evaluation of a state formula against one (P+, P-) pair."""
    plus, minus = pair
    if isinstance(phi, STrue):
        return SVal.TRUE
    if isinstance(phi, Atom):
        if known is not None and phi.name not in known:
            raise ConfigError("unknown atomic proposition %r" % phi.name)
        if phi.name in plus:
            return SVal.TRUE
        if phi.name in minus:
            return SVal.FALSE
        return SVal.UNKNOWN
    if isinstance(phi, Not):
        v = eval_three_valued(phi.arg, pair, known)
        if v == SVal.TRUE:
            return SVal.FALSE
        if v == SVal.FALSE:
            return SVal.TRUE
        return SVal.UNKNOWN
    if isinstance(phi, Or):
        a = eval_three_valued(phi.left, pair, known)
        b = eval_three_valued(phi.right, pair, known)
        if SVal.TRUE in (a, b):
            return SVal.TRUE
        if a == b == SVal.FALSE:
            return SVal.FALSE
        return SVal.UNKNOWN
    if isinstance(phi, And):
        a = eval_three_valued(phi.left, pair, known)
        b = eval_three_valued(phi.right, pair, known)
        if SVal.FALSE in (a, b):
            return SVal.FALSE
        if a == b == SVal.TRUE:
            return SVal.TRUE
        return SVal.UNKNOWN
    raise TypeError("not a state formula: %r" % (phi,))


def sat(rho, phi, mode="exists", known=None):
    """True when some certificate pair makes phi definitely true.

    For `exists` the pairs come from rho-exists; for `forall` from rho-forall
    (usually a single pair).  Unknown never satisfies.
    """
    if mode not in ("exists", "forall"):
        raise ValueError("mode must be 'exists' or 'forall'")
    return any(eval_three_valued(phi, pair, known) == SVal.TRUE for pair in rho)


# ---------------------------------------------------------------------------
# base annotations

class _Base:
    """One temporal operator: two copies, a color per copy, a jump rule."""

    def __init__(self, temporal: Temporal):
        self.op = temporal.op
        self.phi = temporal.arg
        if temporal.op == "GF":
            self.colors = (1, 2)
            self.init = 0
            self.mode = "exists"
        elif temporal.op == "F":
            self.colors = (1, 2)
            self.init = 0
            self.mode = "exists"
        elif temporal.op == "G":
            self.colors = (0, 1)
            self.init = 0
            self.mode = "forall"
        elif temporal.op == "FG":
            self.colors = (0, 1)
            self.init = 1
            self.mode = "forall"
        else:
            raise ConfigError("unknown temporal operator %r" % temporal.op)

    def sat_bit(self, rho_exists, rho_forall, known=None):
        rho = rho_exists if self.mode == "exists" else rho_forall
        return 1 if sat(rho, self.phi, self.mode, known) else 0

    def jump(self, z, bit):
        if self.op == "GF":
            return 1 if bit else 0
        if self.op == "F":
            return 1 if (z == 1 or bit) else 0
        if self.op == "G":
            return 1 if (z == 1 or not bit) else 0
        # FG: memoryless, good exactly on certified transitions
        return 0 if bit else 1


# ---------------------------------------------------------------------------
# Zielonka tree for boolean combinations of parity conditions

class _ZNode:
    __slots__ = ("label", "accepting", "children", "depth", "parent", "index")

    def __init__(self, label, accepting, depth, parent):
        self.label = label  # frozenset of letters (tuples of base colors)
        self.accepting = accepting
        self.children = []
        self.depth = depth
        self.parent = parent
        self.index = None  # position among parent's children


def _letter_accepts(formula, n_bases, letters):
    """Acceptance of an infinite-visitation set given as a letter set.

    Base operands are matched to letter coordinates by left-to-right
    position, the same order `bases()` lists them in.
    """
    maxes = [max(letter[k] for letter in letters) for k in range(n_bases)]
    counter = [0]

    def rec(f):
        if isinstance(f, Temporal):
            k = counter[0]
            counter[0] += 1
            return maxes[k] % 2 == 0
        if isinstance(f, PathAnd):
            a = rec(f.left)
            b = rec(f.right)
            return a and b
        if isinstance(f, PathOr):
            a = rec(f.left)
            b = rec(f.right)
            return a or b
        raise TypeError(f)

    return rec(formula)


def _max_flipped_subsets(formula, n_bases, label):
    """Maximal nonempty subsets of `label` with flipped acceptance.

    Acceptance only depends on the per-coordinate maximum, so every maximal
    flipped subset is a downward closure of `label` under some profile of
    per-coordinate caps; enumerating profiles over the values present is
    exhaustive.
    """
    target = not _letter_accepts(formula, n_bases, label)
    axes = [sorted({letter[k] for letter in label}) for k in range(n_bases)]
    candidates = {}
    for profile in iproduct(*axes):
        sub = frozenset(l for l in label
                        if all(l[k] <= profile[k] for k in range(len(profile))))
        if not sub or sub == label:
            continue
        if _letter_accepts(formula, n_bases, sub) == target:
            candidates[sub] = True
    maximal = []
    for s in candidates:
        if not any(s < t for t in candidates if t is not s):
            maximal.append(s)
    maximal.sort(key=lambda s: sorted(s))
    return maximal


def _build_zielonka(formula, n_bases, alphabet):
    root = _ZNode(frozenset(alphabet),
                  _letter_accepts(formula, n_bases, frozenset(alphabet)), 0, None)
    stack = [root]
    while stack:
        node = stack.pop()
        subs = _max_flipped_subsets(formula, n_bases, node.label)
        for i, sub in enumerate(subs):
            child = _ZNode(sub, not node.accepting, node.depth + 1, node)
            child.index = i
            node.children.append(child)
            stack.append(child)
    return root


def _leaves(root):
    out = []

    def rec(n):
        if not n.children:
            out.append(n)
        else:
            for c in n.children:
                rec(c)
    rec(root)
    return out


# ---------------------------------------------------------------------------
# the compiled annotation

class ParityAnnotation:
    """Deterministic parity monitor for a path formula.

    Copies are integers; `colors[z]` is the color credited when a play enters
    copy z; `jump(z, bits)` advances on a transition whose per-base
    satisfaction bits are packed into the integer `bits` (bit k = base k).
    """

    def __init__(self, formula: PathFormula, known=None):
        self.formula = formula
        base_nodes = formula.bases()
        if known is not None:
            check_atoms(formula, known)
        self.bases = [_Base(t) for t in base_nodes]
        self.n_bases = len(self.bases)
        if self.n_bases == 1:
            b = self.bases[0]
            self.n_copies = 2
            self.init_copy = b.init
            self.colors = b.colors
            self._jump_table = {
                (z, bits): b.jump(z, bits)
                for z in (0, 1) for bits in (0, 1)}
            return
        # product of the base monitors driving a Zielonka-tree leaf automaton
        alphabet = list(iproduct(*[b.colors for b in self.bases]))
        root = _build_zielonka(formula, self.n_bases, alphabet)
        leaves = _leaves(root)
        maxdepth = max(l.depth for l in leaves)
        base_pri = maxdepth
        if (base_pri % 2 == 0) != root.accepting:
            base_pri += 1
        min_pri = min(base_pri - l.depth for l in leaves)

        def step_leaf(leaf, letter):
            node = leaf
            while letter not in node.label:
                node = node.parent  # root holds the full alphabet
            pri = base_pri - node.depth
            if node is leaf or not node.children:
                return leaf, pri
            # climbacked to an inner node: rotate to its next child
            child = leaf
            while child.parent is not node:
                child = child.parent
            nxt = node.children[(child.index + 1) % len(node.children)]
            while nxt.children:
                nxt = nxt.children[0]
            return nxt, pri

        leaf_ids = {id(l): i for i, l in enumerate(leaves)}
        init_state = (tuple(b.init for b in self.bases), 0, min_pri)
        copies = {init_state: 0}
        order = [init_state]
        jump_table = {}
        frontier = [init_state]
        while frontier:
            state = frontier.pop()
            zs, leaf_i, _ = state
            for bits in range(1 << self.n_bases):
                nzs = tuple(b.jump(z, bits >> k & 1)
                            for k, (b, z) in enumerate(zip(self.bases, zs)))
                letter = tuple(b.colors[z] for b, z in zip(self.bases, nzs))
                nleaf, pri = step_leaf(leaves[leaf_i], letter)
                nstate = (nzs, leaf_ids[id(nleaf)], pri)
                if nstate not in copies:
                    copies[nstate] = len(order)
                    order.append(nstate)
                    frontier.append(nstate)
                jump_table[(copies[state], bits)] = copies[nstate]
        self.n_copies = len(order)
        self.init_copy = 0
        self.colors = tuple(s[2] for s in order)
        self._jump_table = jump_table

    # -- public API --------------------------------------------------------

    @property
    def max_color(self):
        return max(self.colors)

    def jump(self, copy, bits):
        return self._jump_table[(copy, bits)]

    def sat_bits(self, rho_exists, rho_forall, known=None):
        bits = 0
        for k, b in enumerate(self.bases):
            bits |= b.sat_bit(rho_exists, rho_forall, known) << k
        return bits

    def describe(self):
        lines = ["formula\t%s" % self.formula,
                 "copies\t%d" % self.n_copies,
                 "init\t%d" % self.init_copy,
                 "colors\t%s" % ",".join(str(c) for c in self.colors)]
        for k, b in enumerate(self.bases):
            lines.append("base\t%d\t%s\t%s\t%s" % (k, b.op, b.phi, b.mode))
        for (z, bits), z2 in sorted(self._jump_table.items()):
            lines.append("jump\t%d\t%d\t%d" % (z, bits, z2))
        return lines


def compile_parity(formula: PathFormula, known=None) -> ParityAnnotation:
    return ParityAnnotation(formula, known=known)


# ---------------------------------------------------------------------------
# exact evaluation on ultimately-periodic bit words (test oracle + checker)

def eval_formula_on_lasso(formula, prefix_bits, cycle_bits):
    """Exact truth of the formula over an ultimately periodic word of
    per-transition satisfaction bits (bit k of each entry = base k, numbered
    left to right)."""
    counter = [0]

    def rec(f):
        if isinstance(f, PathAnd):
            a = rec(f.left)
            b = rec(f.right)
            return a and b
        if isinstance(f, PathOr):
            a = rec(f.left)
            b = rec(f.right)
            return a or b
        k = counter[0]
        counter[0] += 1
        pre = [w >> k & 1 for w in prefix_bits]
        cyc = [w >> k & 1 for w in cycle_bits]
        if f.op == "GF":
            return any(cyc)
        if f.op == "F":
            return any(pre) or any(cyc)
        if f.op == "G":
            return all(pre) and all(cyc)
        if f.op == "FG":
            return all(cyc)
        raise ConfigError("unknown operator %r" % f.op)

    return rec(formula)


def annotation_verdict_on_lasso(ann: ParityAnnotation, prefix_bits, cycle_bits):
    """Parity verdict (max color on the limit loop is even) of the monitor."""
    z = ann.init_copy
    for w in prefix_bits:
        z = ann.jump(z, w)
    seen = {}
    trail = []
    pos = 0
    while (z, pos) not in seen:
        seen[(z, pos)] = len(trail)
        z2 = ann.jump(z, cycle_bits[pos])
        trail.append(ann.colors[z2])
        z = z2
        pos = (pos + 1) % len(cycle_bits)
    loop_start = seen[(z, pos)]
    return max(trail[loop_start:]) % 2 == 0
