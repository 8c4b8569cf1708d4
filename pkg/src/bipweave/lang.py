"""Expression and statement mini-language used for guards and update functions.

Values are Python ``bool`` or ``int``. Integers are bounded to signed 64-bit;
any arithmetic result outside that range raises :class:`EvalError`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

Value = Union[int, bool]


class EvalError(Exception):
    """Raised when evaluating an expression or statement fails at runtime."""


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "not"
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Var, Const, Unary, Binary, Call]

TRUE = Const(True)
FALSE = Const(False)

ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("<", "<=", "==", "!=")
BOOL_OPS = ("and", "or")
BINARY_OPS = ARITH_OPS + COMPARE_OPS + BOOL_OPS


def conj(*parts: Expr) -> Expr:
    """Left-nested conjunction; ``true`` for no operands."""
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = Binary("and", out, p)
    return out


def disj(*parts: Expr) -> Expr:
    """Left-nested disjunction; ``false`` for no operands."""
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Binary("or", out, p)
    return out


def neg(e: Expr) -> Expr:
    return Unary("not", e)


# ---------------------------------------------------------------------------
# Statements and update functions


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Marker:
    """Inert statement delimiting woven code.

    ``tag`` is ``begin`` or ``end``; ``owner`` is the aspect id and ``role``
    one of ``before``, ``after``, ``set`` or ``clear``.
    """

    tag: str
    owner: str
    role: str


@dataclass(frozen=True)
class Skip:
    pass


Stmt = Union[Assign, Marker, Skip]
UpdateFunction = tuple  # tuple[Stmt, ...]

EMPTY: UpdateFunction = ()

MARKER_ROLES = ("before", "after", "set", "clear")


def concat(*fs: Sequence[Stmt]) -> UpdateFunction:
    """Sequential composition of update functions."""
    out: list[Stmt] = []
    for f in fs:
        out.extend(f)
    return tuple(out)


def wrap(f: Sequence[Stmt], owner: str, role: str) -> UpdateFunction:
    """Surround ``f`` with begin/end markers for ``(owner, role)``."""
    return (Marker("begin", owner, role), *f, Marker("end", owner, role))


def strip_blocks(f: Sequence[Stmt], owner: str) -> UpdateFunction:
    """Remove every marker-delimited block belonging to ``owner``."""
    out: list[Stmt] = []
    depth = 0
    for s in f:
        if isinstance(s, Marker) and s.owner == owner:
            depth += 1 if s.tag == "begin" else -1
            continue
        if depth == 0:
            out.append(s)
    return tuple(out)


def starts_with(f: Sequence[Stmt], prefix: Sequence[Stmt]) -> bool:
    return len(prefix) <= len(f) and tuple(f[: len(prefix)]) == tuple(prefix)


def ends_with(f: Sequence[Stmt], suffix: Sequence[Stmt]) -> bool:
    n = len(suffix)
    return n <= len(f) and tuple(f[len(f) - n :]) == tuple(suffix)


# ---------------------------------------------------------------------------
# Static analysis


def _expr_reads(e: Expr, acc: set[str]) -> None:
    if isinstance(e, Var):
        acc.add(e.name)
    elif isinstance(e, Unary):
        _expr_reads(e.arg, acc)
    elif isinstance(e, Binary):
        _expr_reads(e.left, acc)
        _expr_reads(e.right, acc)
    elif isinstance(e, Call):
        for a in e.args:
            _expr_reads(a, acc)


def var_read(f: Union[Expr, Sequence[Stmt]]) -> frozenset[str]:
    """Variables syntactically read by an expression or an update function."""
    acc: set[str] = set()
    if isinstance(f, (Var, Const, Unary, Binary, Call)):
        _expr_reads(f, acc)
    else:
        for s in f:
            if isinstance(s, Assign):
                _expr_reads(s.expr, acc)
    return frozenset(acc)


def var_write(f: Sequence[Stmt]) -> frozenset[str]:
    """Assignment targets of an update function."""
    return frozenset(s.target for s in f if isinstance(s, Assign))


def expr_vars(e: Expr) -> frozenset[str]:
    return var_read(e)


def rename_expr(e: Expr, mapping: Callable[[str], str]) -> Expr:
    if isinstance(e, Var):
        return Var(mapping(e.name))
    if isinstance(e, Unary):
        return Unary(e.op, rename_expr(e.arg, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, rename_expr(e.left, mapping), rename_expr(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.name, tuple(rename_expr(a, mapping) for a in e.args))
    return e


def rename_func(f: Sequence[Stmt], mapping: Callable[[str], str]) -> UpdateFunction:
    out: list[Stmt] = []
    for s in f:
        if isinstance(s, Assign):
            out.append(Assign(mapping(s.target), rename_expr(s.expr, mapping)))
        else:
            out.append(s)
    return tuple(out)


def calls_in(e: Expr) -> Iterable[Call]:
    if isinstance(e, Call):
        yield e
        for a in e.args:
            yield from calls_in(a)
    elif isinstance(e, Unary):
        yield from calls_in(e.arg)
    elif isinstance(e, Binary):
        yield from calls_in(e.left)
        yield from calls_in(e.right)


# ---------------------------------------------------------------------------
# Builtins


def _check_range(v: int) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise EvalError(f"integer overflow: {v}")
    return v


def _tdiv(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return _check_range(q if (a >= 0) == (b >= 0) else -q)


def _tmod(a: int, b: int) -> int:
    if b == 0:
        raise EvalError("modulo by zero")
    return a - b * _tdiv(a, b)


def _sig(n: int) -> int:
    return (abs(n) * 7) % 10


def _sign(n: int) -> int:
    return _check_range(n * 10 + _sig(n))


def _check(p: int) -> int:
    return 1 if p % 10 == _sig(_tdiv(p, 10)) else 0


def _pfake(p: int) -> int:
    # swap the two lowest payload digits, keep the signature digit
    payload, s = _tdiv(p, 10), p % 10
    hi, d1, d0 = payload // 100, (payload // 10) % 10, payload % 10
    return _check_range(((hi * 100 + d0 * 10 + d1) * 10) + s)


def _gen(k: int) -> int:
    return 10 + (k * 37 + 78) % 90


@dataclass(frozen=True)
class Builtin:
    arity: int
    arg_kinds: tuple[str, ...]
    result: str
    fn: Callable[..., Value]


BUILTINS: dict[str, Builtin] = {
    "abs": Builtin(1, ("int",), "int", lambda a: _check_range(abs(a))),
    "min": Builtin(2, ("int", "int"), "int", min),
    "max": Builtin(2, ("int", "int"), "int", max),
    "sig": Builtin(1, ("int",), "int", _sig),
    "sign": Builtin(1, ("int",), "int", _sign),
    "check": Builtin(1, ("int",), "int", _check),
    "pfake": Builtin(1, ("int",), "int", _pfake),
    "gen": Builtin(1, ("int",), "int", _gen),
}


# ---------------------------------------------------------------------------
# Type checking


def infer_kind(e: Expr, kind_of: Callable[[str], str | None], errors: list[str]) -> str | None:
    """Return ``int``/``bool`` for ``e``; append messages to ``errors``."""
    if isinstance(e, Const):
        return "bool" if isinstance(e.value, bool) else "int"
    if isinstance(e, Var):
        k = kind_of(e.name)
        if k is None:
            errors.append(f"unknown variable '{e.name}'")
        return k
    if isinstance(e, Unary):
        k = infer_kind(e.arg, kind_of, errors)
        want = "int" if e.op == "neg" else "bool"
        if k is not None and k != want:
            errors.append(f"operator {e.op} expects {want}")
        return want
    if isinstance(e, Binary):
        lk = infer_kind(e.left, kind_of, errors)
        rk = infer_kind(e.right, kind_of, errors)
        if e.op in ("/", "%") and isinstance(e.right, Const) and e.right.value == 0:
            errors.append(f"{'division' if e.op == '/' else 'modulo'} by literal zero")
        if e.op in ARITH_OPS:
            if "bool" in (lk, rk):
                errors.append(f"operator {e.op} expects int operands")
            return "int"
        if e.op in BOOL_OPS:
            if "int" in (lk, rk):
                errors.append(f"operator {e.op} expects bool operands")
            return "bool"
        if e.op in ("<", "<="):
            if "bool" in (lk, rk):
                errors.append(f"operator {e.op} expects int operands")
        elif lk is not None and rk is not None and lk != rk:
            errors.append(f"operator {e.op} compares {lk} with {rk}")
        return "bool"
    if isinstance(e, Call):
        b = BUILTINS.get(e.name)
        kinds = [infer_kind(a, kind_of, errors) for a in e.args]
        if b is None:
            errors.append(f"unknown builtin '{e.name}'")
            return None
        if len(e.args) != b.arity:
            errors.append(f"builtin '{e.name}' expects {b.arity} argument(s)")
        for k, want in zip(kinds, b.arg_kinds):
            if k is not None and k != want:
                errors.append(f"builtin '{e.name}' expects {want} argument")
        return b.result
    errors.append(f"not an expression: {e!r}")
    return None


# ---------------------------------------------------------------------------
# Compilation to closures over a flat environment list

Env = list
Slot = Callable[[str], int]


def compile_expr(e: Expr, slot: Slot) -> Callable[[Env], Value]:
    """Compile ``e`` to a function of an environment list indexed by ``slot``."""
    if isinstance(e, Const):
        v = e.value
        return lambda env: v
    if isinstance(e, Var):
        i = slot(e.name)
        return lambda env: env[i]
    if isinstance(e, Unary):
        f = compile_expr(e.arg, slot)
        if e.op == "not":
            return lambda env: not f(env)
        return lambda env: _check_range(-f(env))
    if isinstance(e, Binary):
        lf = compile_expr(e.left, slot)
        rf = compile_expr(e.right, slot)
        op = e.op
        if op == "and":
            return lambda env: bool(lf(env)) and bool(rf(env))
        if op == "or":
            return lambda env: bool(lf(env)) or bool(rf(env))
        if op == "+":
            return lambda env: _check_range(lf(env) + rf(env))
        if op == "-":
            return lambda env: _check_range(lf(env) - rf(env))
        if op == "*":
            return lambda env: _check_range(lf(env) * rf(env))
        if op == "/":
            return lambda env: _tdiv(lf(env), rf(env))
        if op == "%":
            return lambda env: _tmod(lf(env), rf(env))
        if op == "<":
            return lambda env: lf(env) < rf(env)
        if op == "<=":
            return lambda env: lf(env) <= rf(env)
        if op == "==":
            return lambda env: lf(env) == rf(env)
        if op == "!=":
            return lambda env: lf(env) != rf(env)
        raise ValueError(f"unknown operator {op}")
    if isinstance(e, Call):
        b = BUILTINS.get(e.name)
        if b is None:
            raise ValueError(f"unknown builtin {e.name}")
        argfs = [compile_expr(a, slot) for a in e.args]
        fn = b.fn
        return lambda env: fn(*[a(env) for a in argfs])
    raise TypeError(f"not an expression: {e!r}")


def compile_func(f: Sequence[Stmt], slot: Slot) -> Callable[[Env], None]:
    """Compile an update function to an in-place mutator of ``env``."""
    steps: list[tuple[int, Callable[[Env], Value]]] = []
    for s in f:
        if isinstance(s, Assign):
            steps.append((slot(s.target), compile_expr(s.expr, slot)))
    if not steps:
        return lambda env: None

    def run(env: Env) -> None:
        for i, ef in steps:
            env[i] = ef(env)

    return run


def evaluate(e: Expr, valuation: dict[str, Value]) -> Value:
    """Evaluate ``e`` against a name-to-value mapping (convenience helper)."""
    names = list(valuation)
    index = {n: i for i, n in enumerate(names)}

    def slot(n: str) -> int:
        if n not in index:
            raise EvalError(f"unbound variable '{n}'")
        return index[n]

    return compile_expr(e, slot)([valuation[n] for n in names])


def execute(f: Sequence[Stmt], valuation: dict[str, Value]) -> dict[str, Value]:
    """Run an update function on a copy of ``valuation`` and return it."""
    names = list(valuation)
    index = {n: i for i, n in enumerate(names)}

    def slot(n: str) -> int:
        if n not in index:
            raise EvalError(f"unbound variable '{n}'")
        return index[n]

    env = [valuation[n] for n in names]
    compile_func(f, slot)(env)
    return dict(zip(names, env))
