"""Potential expressions: parsing and exact derivative evaluation.

A potential is a closed arithmetic expression over variables x1..x16 with
+, -, *, /, ^ and the functions exp, log, sin, cos, sqrt.  Evaluation
carries second-order forward-mode jets (value, gradient, Hessian), so all
derivatives are exact to machine rounding; nothing is differenced
numerically.  The same interpreter runs on batches of points, which is
what the quadrature grids, basin flows and Langevin chains use.

Precedence: ^ (right-assoc) binds tighter than unary minus, which binds
tighter than * and /, which bind tighter than + and -.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    NonFinite,
    PotentialSyntaxError,
    UnknownIdentifier,
)

MAX_DIM = 16
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
_MAX_INT_POW = 1000


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/', '^'
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


@dataclass(frozen=True)
class Potential:
    """An immutable parsed potential over R^dim."""

    expr: object
    dim: int
    name: str = ""

    def eval_jet2(self, x):
        return eval_jet2(self, x)

    def values(self, points):
        return eval_values(self, points)

    def gradients(self, points):
        return eval_gradients(self, points)

    def jets(self, points):
        return eval_jets(self, points)

    def __str__(self):
        return format_expr(self.expr)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

def _tokenize(source):
    tokens = []  # (kind, text_or_value, position)
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            tokens.append(("num", float(source[i:j]), i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("ident", source[i:j], i))
            i = j
            continue
        raise PotentialSyntaxError(i, {"number", "identifier", "operator"},
                                   "unexpected character %r at position %d" % (c, i))
    tokens.append(("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Recursive-descent parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens, dim):
        self.tokens = tokens
        self.pos = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise PotentialSyntaxError(tok[2], {kind})
        return self.advance()

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise PotentialSyntaxError(tok[2], {"end of input", "operator"})
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        # unary minus binds looser than ^, so -x1^2 == -(x1^2)
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.peek()
        kind = tok[0]
        if kind == "num":
            self.advance()
            return Num(tok[1])
        if kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            self.advance()
            name = tok[1]
            if name == "pi":
                return Pi()
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name.startswith("x") and name[1:].isdigit():
                idx = int(name[1:])
                if not 1 <= idx <= MAX_DIM:
                    raise UnknownIdentifier(
                        "variable %r outside x1..x%d" % (name, MAX_DIM))
                if idx > self.dim:
                    raise DimensionMismatch(
                        "variable %r exceeds declared dimension %d" % (name, self.dim))
                return Var(idx - 1)
            raise UnknownIdentifier("unknown identifier %r at position %d"
                                    % (name, tok[2]))
        raise PotentialSyntaxError(tok[2], {"number", "identifier", "("})


def parse_potential(source, dim, name=""):
    """Parse `source` into a Potential over R^dim.

    Raises PotentialSyntaxError, UnknownIdentifier or DimensionMismatch.
    """
    if not isinstance(source, str) or not source.strip():
        raise PotentialSyntaxError(0, {"expression"}, "empty potential source")
    if not 1 <= dim <= MAX_DIM:
        raise DimensionMismatch("dim must be in 1..%d, got %r" % (MAX_DIM, dim))
    tokens = _tokenize(source)
    expr = _Parser(tokens, dim).parse()
    return Potential(expr=expr, dim=dim, name=name or source.strip())


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through parse_potential)
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and e.value < 0:
        return _PREC["neg"]
    return _PREC["atom"]


def format_expr(e):
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return "x%d" % (e.index + 1)
    if isinstance(e, Neg):
        inner = format_expr(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = "(%s)" % inner
        return "-%s" % inner
    if isinstance(e, Call):
        return "%s(%s)" % (e.name, format_expr(e.arg))
    if isinstance(e, BinOp):
        lp, rp = _prec(e.left), _prec(e.right)
        me = _PREC[e.op]
        left = format_expr(e.left)
        right = format_expr(e.right)
        # left-assoc chains keep the left child unparenthesised at equal
        # precedence; '^' is right-assoc so the rule flips
        if e.op == "^":
            if lp <= me:
                left = "(%s)" % left
            if rp < me:
                right = "(%s)" % right
        else:
            if lp < me:
                left = "(%s)" % left
            if rp <= me:
                right = "(%s)" % right
        return "%s %s %s" % (left, e.op, right)
    raise TypeError("not an expression node: %r" % (e,))


# ---------------------------------------------------------------------------
# Jet evaluation
#
# A jet of a batch of m points in R^n is (val, grad, hess) with shapes
# (m,), (n, m), (t, m) where t = n(n+1)/2 and hess holds the upper
# triangle row-major: (0,0), (0,1), ..., (0,n-1), (1,1), ...
# ---------------------------------------------------------------------------

def _tri_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


class _Ctx:
    def __init__(self, n, m, order):
        self.n = n
        self.m = m
        self.order = order
        self.pairs = _tri_pairs(n)
        self.t = len(self.pairs)


def _const_jet(ctx, value):
    val = np.full(ctx.m, value)
    if ctx.order == 0:
        return (val, None, None)
    grad = np.zeros((ctx.n, ctx.m))
    hess = np.zeros((ctx.t, ctx.m)) if ctx.order == 2 else None
    return (val, grad, hess)


def _sym_outer(ctx, a, b):
    # packed upper triangle of a (x) b + b (x) a
    out = np.empty((ctx.t, ctx.m))
    for k, (i, j) in enumerate(ctx.pairs):
        out[k] = a[i] * b[j] + a[j] * b[i]
    return out


def _self_outer(ctx, a):
    # packed upper triangle of a (x) a
    out = np.empty((ctx.t, ctx.m))
    for k, (i, j) in enumerate(ctx.pairs):
        out[k] = a[i] * a[j]
    return out


def _add(ctx, a, b, sign):
    val = a[0] + sign * b[0]
    if ctx.order == 0:
        return (val, None, None)
    grad = a[1] + sign * b[1]
    hess = a[2] + sign * b[2] if ctx.order == 2 else None
    return (val, grad, hess)


def _mul(ctx, a, b):
    val = a[0] * b[0]
    if ctx.order == 0:
        return (val, None, None)
    grad = a[1] * b[0] + b[1] * a[0]
    hess = None
    if ctx.order == 2:
        hess = a[2] * b[0] + b[2] * a[0] + _sym_outer(ctx, a[1], b[1])
    return (val, grad, hess)


def _chain(ctx, u, f, fp, fpp):
    """Compose a scalar function through a jet: f(u), f'(u)u', etc."""
    val = f
    if ctx.order == 0:
        return (val, None, None)
    grad = fp * u[1]
    hess = None
    if ctx.order == 2:
        hess = fp * u[2] + fpp * _self_outer(ctx, u[1])
    return (val, grad, hess)


def _recip(ctx, b):
    v = b[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / v
        return _chain(ctx, b, inv, -inv * inv, 2.0 * inv * inv * inv)


def _int_pow(ctx, a, k):
    # repeated multiplication keeps integer powers exact for any sign of base
    if k == 0:
        return _const_jet(ctx, 1.0)
    if k < 0:
        return _recip(ctx, _int_pow(ctx, a, -k))
    out = a
    for _ in range(k - 1):
        out = _mul(ctx, out, a)
    return out


def _literal_value(e):
    """Fold a variable-free subexpression to a float, else None."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        inner = _literal_value(e.arg)
        return None if inner is None else -inner
    if isinstance(e, BinOp):
        a = _literal_value(e.left)
        b = _literal_value(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b if b != 0.0 else None
        if e.op == "^" and float(b).is_integer() and abs(b) <= _MAX_INT_POW:
            return a ** int(b)
    return None


def _eval(ctx, e, x):
    if isinstance(e, Num):
        return _const_jet(ctx, e.value)
    if isinstance(e, Pi):
        return _const_jet(ctx, np.pi)
    if isinstance(e, Var):
        val = x[:, e.index].copy()
        if ctx.order == 0:
            return (val, None, None)
        grad = np.zeros((ctx.n, ctx.m))
        grad[e.index] = 1.0
        hess = np.zeros((ctx.t, ctx.m)) if ctx.order == 2 else None
        return (val, grad, hess)
    if isinstance(e, Neg):
        a = _eval(ctx, e.arg, x)
        return (-a[0],
                None if a[1] is None else -a[1],
                None if a[2] is None else -a[2])
    if isinstance(e, Call):
        u = _eval(ctx, e.arg, x)
        v = u[0]
        if e.name == "exp":
            f = np.exp(v)
            return _chain(ctx, u, f, f, f)
        if e.name == "log":
            if np.any(v <= 0.0):
                raise DomainError("log of non-positive argument")
            return _chain(ctx, u, np.log(v), 1.0 / v, -1.0 / (v * v))
        if e.name == "sin":
            return _chain(ctx, u, np.sin(v), np.cos(v), -np.sin(v))
        if e.name == "cos":
            return _chain(ctx, u, np.cos(v), -np.sin(v), -np.cos(v))
        if e.name == "sqrt":
            if np.any(v <= 0.0):
                raise DomainError("sqrt of non-positive argument")
            s = np.sqrt(v)
            return _chain(ctx, u, s, 0.5 / s, -0.25 / (s * v))
        raise UnknownIdentifier(e.name)
    if isinstance(e, BinOp):
        if e.op == "^":
            k = _literal_value(e.right)
            if k is not None and float(k).is_integer() and abs(k) <= _MAX_INT_POW:
                return _int_pow(ctx, _eval(ctx, e.left, x), int(k))
            a = _eval(ctx, e.left, x)
            b = _eval(ctx, e.right, x)
            if np.any(a[0] <= 0.0):
                raise DomainError("real power of non-positive base")
            # a^b = exp(b log a)
            loga = _chain(ctx, a, np.log(a[0]), 1.0 / a[0], -1.0 / (a[0] * a[0]))
            prod = _mul(ctx, b, loga)
            f = np.exp(prod[0])
            return _chain(ctx, prod, f, f, f)
        a = _eval(ctx, e.left, x)
        b = _eval(ctx, e.right, x)
        if e.op == "+":
            return _add(ctx, a, b, 1.0)
        if e.op == "-":
            return _add(ctx, a, b, -1.0)
        if e.op == "*":
            return _mul(ctx, a, b)
        if e.op == "/":
            return _mul(ctx, a, _recip(ctx, b))
    raise TypeError("not an expression node: %r" % (e,))


def _as_points(p, points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if p.dim == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != p.dim:
        raise DimensionMismatch("points must have shape (m, %d)" % p.dim)
    return pts


def eval_values(p, points):
    """H at a batch of points, shape (m,)."""
    pts = _as_points(p, points)
    ctx = _Ctx(p.dim, pts.shape[0], 0)
    val = _eval(ctx, p.expr, pts)[0]
    if not np.all(np.isfinite(val)):
        raise NonFinite("potential value not finite")
    return val


def eval_gradients(p, points):
    """(values, gradients) at a batch, shapes (m,), (m, n)."""
    pts = _as_points(p, points)
    ctx = _Ctx(p.dim, pts.shape[0], 1)
    val, grad, _ = _eval(ctx, p.expr, pts)
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(grad))):
        raise NonFinite("potential gradient not finite")
    return val, grad.T.copy()


def eval_jets(p, points):
    """(values, gradients, packed Hessians) at a batch.

    Hessians come back packed as the upper triangle, shape (m, n(n+1)/2);
    use `unpack_hessian` for the full symmetric matrix.
    """
    pts = _as_points(p, points)
    ctx = _Ctx(p.dim, pts.shape[0], 2)
    val, grad, hess = _eval(ctx, p.expr, pts)
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(grad))
            and np.all(np.isfinite(hess))):
        raise NonFinite("potential jet not finite")
    return val, grad.T.copy(), hess.T.copy()


def unpack_hessian(packed, n):
    """Expand packed upper triangles (m, t) to symmetric matrices (m, n, n)."""
    packed = np.atleast_2d(packed)
    m = packed.shape[0]
    out = np.empty((m, n, n))
    for k, (i, j) in enumerate(_tri_pairs(n)):
        out[:, i, j] = packed[:, k]
        out[:, j, i] = packed[:, k]
    return out


class Jet2:
    """Value, gradient and exactly symmetric Hessian at one point."""

    __slots__ = ("value", "gradient", "hess_upper", "dim")

    def __init__(self, value, gradient, hess_upper):
        self.value = float(value)
        self.gradient = np.asarray(gradient, dtype=float)
        self.hess_upper = np.asarray(hess_upper, dtype=float)
        self.dim = self.gradient.shape[0]

    @property
    def hessian(self):
        return unpack_hessian(self.hess_upper[None, :], self.dim)[0]

    @property
    def laplacian(self):
        n = self.dim
        diag = [k for k, (i, j) in enumerate(_tri_pairs(n)) if i == j]
        return float(self.hess_upper[diag].sum())


def eval_jet2(p, x):
    """Exact (H, grad H, hess H) at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.dim:
        raise DimensionMismatch("point has length %d, potential dim is %d"
                                % (x.shape[0], p.dim))
    if not np.all(np.isfinite(x)):
        raise NonFinite("evaluation point not finite")
    val, grad, hess = eval_jets(p, x[None, :])
    return Jet2(val[0], grad[0], hess[0])
