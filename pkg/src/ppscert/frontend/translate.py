"""Compilation of pPL programs to probabilistic pushdown automata.

Lowering hoists every effectful subexpression (flip, uniform, choice,
procedure call) into a fresh temporary assigned by a preceding statement,
left to right, so control-flow points only ever evaluate pure expressions
over a concrete local store.  Each reachable (procedure, point, store)
triple becomes one stack symbol; the control states are `run` plus one
`ret_v` state per return value actually produced.  A call pushes the
callee's entry symbol on top of a continuation symbol; returning pops into
`ret_v`, and the continuation reads that state to resume with the value
bound.  Emptying the stack in `ret_v` is program termination with value v.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from ..errors import TranslateError
from ..ppda import Ppda
from .ppl import (
    Assign, Bin, BoolLit, CallE, Choice, Decl, ExprStmt, Flip, If, IntLit,
    Not, PCompl, PConst, PRatio, ProbStmt, Program, Return, Uniform,
    Var, While,
)


@dataclass(frozen=True)
class TranslateConfig:
    max_symbols: int = 1_000_000


MAIN = "@main"


# ---------------------------------------------------------------------------
# lowering: hoist effects out of expressions


class _Lowerer:
    def __init__(self, program: Program):
        self.program = program
        self.counter = 0
        self.temp_types: dict[str, str] = {}

    def fresh(self, ty: str) -> str:
        name = f"_t{self.counter}"
        self.counter += 1
        while name in self.temp_types:  # dodge user variables named like temps
            name = f"_t{self.counter}"
            self.counter += 1
        self.temp_types[name] = ty
        return name

    def lower_block(self, stmts) -> list:
        out = []
        for stmt in stmts:
            self.lower_stmt(stmt, out)
        return out

    def lower_stmt(self, stmt, out):
        if isinstance(stmt, (Decl, Assign)):
            if isinstance(stmt, Decl):
                self.temp_types[stmt.name] = stmt.type
            pure = self.lower_expr(stmt.expr, out)
            out.append(Assign(stmt.name, pure, line=stmt.line))
        elif isinstance(stmt, If):
            cond = self.lower_expr(stmt.cond, out)
            out.append(If(cond, self.lower_block(stmt.then),
                          self.lower_block(stmt.els) if stmt.els else None,
                          line=stmt.line))
        elif isinstance(stmt, While):
            prelude: list = []
            cond = self.lower_expr(stmt.cond, prelude)
            body = self.lower_block(stmt.body)
            out.extend(prelude)
            # the condition's effects re-run before every test
            out.append(While(cond, body + _copy_stmts(prelude), line=stmt.line))
        elif isinstance(stmt, ProbStmt):
            arms = [(p, self.lower_block(body)) for p, body in stmt.arms]
            out.append(ProbStmt(arms, line=stmt.line))
        elif isinstance(stmt, ExprStmt):
            self.lower_expr(stmt.expr, out)
        elif isinstance(stmt, Return):
            expr = self.lower_expr(stmt.expr, out) if stmt.expr is not None else None
            out.append(Return(expr, line=stmt.line))
        else:
            raise AssertionError(f"unknown statement {stmt!r}")

    def lower_expr(self, expr, out):
        if isinstance(expr, (IntLit, BoolLit, Var)):
            return expr
        if isinstance(expr, Not):
            return Not(self.lower_expr(expr.operand, out), line=expr.line)
        if isinstance(expr, Bin):
            left = self.lower_expr(expr.left, out)
            right = self.lower_expr(expr.right, out)
            return Bin(expr.op, left, right, line=expr.line)
        if isinstance(expr, Flip):
            t = self.fresh("bool")
            out.append(ProbStmt(
                [(expr.prob, [Assign(t, BoolLit(True))]),
                 (PCompl(expr.prob), [Assign(t, BoolLit(False))])],
                line=expr.line,
            ))
            return Var(t, line=expr.line)
        if isinstance(expr, Uniform):
            t = self.fresh("int")
            p = PConst(Fraction(1, expr.bound))
            out.append(ProbStmt(
                [(p, [Assign(t, IntLit(v))]) for v in range(expr.bound)],
                line=expr.line,
            ))
            return Var(t, line=expr.line)
        if isinstance(expr, Choice):
            ty = self._choice_type(expr)
            t = self.fresh(ty)
            arms = []
            for p, arm_expr in expr.arms:
                body: list = []
                pure = self.lower_expr(arm_expr, body)
                body.append(Assign(t, pure))
                arms.append((p, body))
            out.append(ProbStmt(arms, line=expr.line))
            return Var(t, line=expr.line)
        if isinstance(expr, CallE):
            args = [self.lower_expr(a, out) for a in expr.args]
            ret = self.program.procs[expr.name].ret
            if ret == "void":
                out.append(_LCall(None, expr.name, args, expr.line))
                return BoolLit(True, line=expr.line)  # void value, never read
            t = self.fresh(ret)
            out.append(_LCall(t, expr.name, args, expr.line))
            return Var(t, line=expr.line)
        raise AssertionError(f"unknown expression {expr!r}")

    def _choice_type(self, expr: Choice) -> str:
        probe = expr.arms[0][1]
        while isinstance(probe, Choice):
            probe = probe.arms[0][1]
        if isinstance(probe, (BoolLit, Flip, Not)):
            return "bool"
        if isinstance(probe, (IntLit, Uniform)):
            return "int"
        if isinstance(probe, Var):
            return self.temp_types.get(probe.name) or "bool"
        if isinstance(probe, CallE):
            return self.program.procs[probe.name].ret
        if isinstance(probe, Bin):
            return "bool" if probe.op in ("<", "<=", ">", ">=", "==", "!=") else "int"
        return "bool"


@dataclass
class _LCall:
    target: str | None
    proc: str
    args: list
    line: int = 0


def _copy_stmts(stmts):
    return list(stmts)  # lowered statements are never mutated, sharing is fine


# ---------------------------------------------------------------------------
# control-flow points


@dataclass
class PAssign:
    var: str
    expr: object
    nxt: int


@dataclass
class PBranch:
    cond: object
    on_true: int
    on_false: int


@dataclass
class PProb:
    arms: list  # (PExpr, next point)


@dataclass
class PCall:
    target: str | None
    proc: str
    args: list
    nxt: int


@dataclass
class PReturn:
    expr: object | None


class _ProcCode:
    def __init__(self, name, ret, params, locals_, points, entry):
        self.name = name
        self.ret = ret
        self.params = params  # ordered (type, name)
        self.locals = locals_  # ordered names, params first
        self.offsets = {v: i for i, v in enumerate(locals_)}
        self.points = points
        self.entry = entry


def _collect_locals(params, stmts, temp_types):
    names = [n for _, n in params]
    types = {n: t for t, n in params}

    def note(name):
        if name is not None and name not in types:
            types[name] = temp_types.get(name, "bool")
            names.append(name)

    def walk(block):
        for stmt in block:
            if isinstance(stmt, Assign):
                note(stmt.name)
            elif isinstance(stmt, _LCall):
                note(stmt.target)
            elif isinstance(stmt, If):
                walk(stmt.then)
                if stmt.els:
                    walk(stmt.els)
            elif isinstance(stmt, While):
                walk(stmt.body)
            elif isinstance(stmt, ProbStmt):
                for _, body in stmt.arms:
                    walk(body)

    walk(stmts)
    return names, types


def _compile_proc(name, ret, params, body, lowerer, decls):
    points: list = []

    def alloc(point) -> int:
        points.append(point)
        return len(points) - 1

    exit_id = alloc(PReturn(None))  # implicit void return at the end

    def compile_block(stmts, nxt):
        for stmt in reversed(stmts):
            nxt = compile_stmt(stmt, nxt)
        return nxt

    def compile_stmt(stmt, nxt):
        if isinstance(stmt, Assign):
            return alloc(PAssign(stmt.name, stmt.expr, nxt))
        if isinstance(stmt, If):
            then = compile_block(stmt.then, nxt)
            els = compile_block(stmt.els, nxt) if stmt.els else nxt
            return alloc(PBranch(stmt.cond, then, els))
        if isinstance(stmt, While):
            test = alloc(PBranch(stmt.cond, 0, nxt))
            body = compile_block(stmt.body, test)
            points[test].on_true = body
            return test
        if isinstance(stmt, ProbStmt):
            arms = [(p, compile_block(body, nxt)) for p, body in stmt.arms]
            return alloc(PProb(arms))
        if isinstance(stmt, _LCall):
            return alloc(PCall(stmt.target, stmt.proc, stmt.args, nxt))
        if isinstance(stmt, Return):
            return alloc(PReturn(stmt.expr))
        raise AssertionError(f"unlowered statement {stmt!r}")

    entry = compile_block(body, exit_id)
    locals_, types = _collect_locals(params, body, lowerer.temp_types)
    code = _ProcCode(name, ret, params, locals_, points, entry)
    code.types = types
    decls[name] = code
    return code


# ---------------------------------------------------------------------------
# pure evaluation over a concrete store


def _eval(expr, code, store, int_max):
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Var):
        return store[code.offsets[expr.name]]
    if isinstance(expr, Not):
        return not _eval(expr.operand, code, store, int_max)
    if isinstance(expr, Bin):
        a = _eval(expr.left, code, store, int_max)
        b = _eval(expr.right, code, store, int_max)
        if expr.op == "+":
            return (a + b) % (int_max + 1)
        if expr.op == "-":
            return (a - b) % (int_max + 1)
        if expr.op == "%":
            if b == 0:
                raise TranslateError(f"modulo by zero at line {expr.line}")
            return a % b
        if expr.op == "<":
            return a < b
        if expr.op == "<=":
            return a <= b
        if expr.op == ">":
            return a > b
        if expr.op == ">=":
            return a >= b
        if expr.op == "==":
            return a == b
        if expr.op == "!=":
            return a != b
    raise AssertionError(f"effectful expression survived lowering: {expr!r}")


def _eval_prob(p, code, store, int_max) -> Fraction:
    if isinstance(p, PConst):
        return p.value
    if isinstance(p, PCompl):
        return 1 - _eval_prob(p.inner, code, store, int_max)
    if isinstance(p, PRatio):
        num = _eval(p.num, code, store, int_max)
        den = _eval(p.den, code, store, int_max)
        if den == 0:
            raise TranslateError("probability with zero denominator")
        value = Fraction(num, den)
        if not (0 <= value <= 1):
            raise TranslateError(f"probability {value} outside [0, 1]")
        return value
    raise AssertionError(f"unknown probability expression {p!r}")


# ---------------------------------------------------------------------------
# the reachability worklist


def _ret_state(value) -> str:
    if value == "unit":
        return "ret_unit"
    if isinstance(value, bool):
        return "ret_true" if value else "ret_false"
    return f"ret_{value}"


def translate(program: Program, config: TranslateConfig = TranslateConfig()):
    """Compile a checked program into (pPDA, initial configuration, value map).

    The value map sends each return state to the main-block value it
    represents; return probabilities from the initial configuration to
    those states are exactly the output distribution of the program.
    """
    decls: dict[str, _ProcCode] = {}
    for name in program.order:
        proc = program.procs[name]
        lowerer = _Lowerer(program)  # per procedure: types and temps are local
        for ty, pname in proc.params:
            lowerer.temp_types[pname] = ty
        _compile_proc(name, proc.ret, proc.params, lowerer.lower_block(proc.body), lowerer, decls)
    lowerer = _Lowerer(program)
    _compile_proc(MAIN, program.main_ret, [], lowerer.lower_block(program.main), lowerer, decls)

    int_max = program.int_max
    symbol_name: dict[tuple, str] = {}
    symbol_order: list[str] = []
    used_names: set[str] = set()
    transitions: dict[tuple[str, str], list] = {}
    ret_states: list[str] = []
    ret_values: dict[str, object] = {}
    values_of_type: dict[str, list] = {"void": [], "bool": [], "int": []}
    conts_of_type: dict[str, list] = {"void": [], "bool": [], "int": []}
    queue: deque = deque()

    def intern(key, label) -> str:
        if key in symbol_name:
            return symbol_name[key]
        if len(symbol_order) >= config.max_symbols:
            raise TranslateError(
                f"state-space cap of {config.max_symbols} stack symbols exceeded"
            )
        name = label
        bump = 1
        while name in used_names:
            name = f"{label}_{bump}"
            bump += 1
        used_names.add(name)
        symbol_name[key] = name
        symbol_order.append(name)
        queue.append(key)
        return name

    def frame_label(code, point, store):
        parts = [code.name.replace("@", "m"), f"p{point}"]
        parts += [_fmt_value(v) for v in store]
        return "_".join(parts)

    def frame(code, point, store) -> str:
        return intern(("f", code.name, point, store), frame_label(code, point, store))

    def cont(code, point, store, target) -> str:
        label = frame_label(code, point, store) + "_k" + (target or "")
        return intern(("k", code.name, point, store, target), label)

    def materialize_ret(value) -> str:
        state = _ret_state(value)
        if state not in ret_values:
            ret_values[state] = value
            ret_states.append(state)
            ty = "void" if value == "unit" else ("bool" if isinstance(value, bool) else "int")
            values_of_type[ty].append(value)
            for entry in conts_of_type[ty]:
                _wire_continuation(entry, value)
        return state

    def _wire_continuation(entry, value):
        code, point, store, target, sym = entry
        new_store = store
        if target is not None:
            new_store = _set(store, code.offsets[target], value)
        succ = frame(code, point, new_store)
        transitions.setdefault((_ret_state(value), sym), []).append((Fraction(1), "run", (succ,)))

    def add_continuation(code, point, store, target, callee_ret):
        sym = cont(code, point, store, target)
        key = ("kdone", code.name, point, store, target)
        if key in symbol_name:  # transitions already wired
            return sym
        symbol_name[key] = sym
        entry = (code, point, store, target, sym)
        conts_of_type[callee_ret].append(entry)
        for value in values_of_type[callee_ret]:
            _wire_continuation(entry, value)
        return sym

    def default_store(code) -> tuple:
        out = []
        for var in code.locals:
            out.append(False if code.types[var] == "bool" else 0)
        return tuple(out)

    def entry_symbol(code, args) -> str:
        store = list(default_store(code))
        for i, value in enumerate(args):
            store[i] = value
        return frame(code, code.entry, tuple(store))

    main_code = decls[MAIN]
    init_symbol = entry_symbol(main_code, [])

    while queue:
        key = queue.popleft()
        if key[0] == "k":
            continue  # continuations are wired by add_continuation
        _, proc_name, point_id, store = key
        code = decls[proc_name]
        sym = symbol_name[key]
        point = code.points[point_id]
        src = ("run", sym)
        if isinstance(point, PAssign):
            value = _eval(point.expr, code, store, int_max)
            succ = frame(code, point.nxt, _set(store, code.offsets[point.var], value))
            transitions.setdefault(src, []).append((Fraction(1), "run", (succ,)))
        elif isinstance(point, PBranch):
            taken = point.on_true if _eval(point.cond, code, store, int_max) else point.on_false
            succ = frame(code, taken, store)
            transitions.setdefault(src, []).append((Fraction(1), "run", (succ,)))
        elif isinstance(point, PProb):
            total = Fraction(0)
            grouped: dict[str, Fraction] = {}
            for p, nxt in point.arms:
                prob = _eval_prob(p, code, store, int_max)
                total += prob
                if prob == 0:
                    continue
                succ = frame(code, nxt, store)
                grouped[succ] = grouped.get(succ, Fraction(0)) + prob
            if total != 1:
                raise TranslateError(
                    f"probabilities sum to {total} at a prob point of {proc_name}"
                )
            for succ, prob in grouped.items():
                transitions.setdefault(src, []).append((prob, "run", (succ,)))
        elif isinstance(point, PCall):
            callee = decls[point.proc]
            args = [_eval(a, code, store, int_max) for a in point.args]
            callee_sym = entry_symbol(callee, args)
            k_sym = add_continuation(code, point.nxt, store, point.target, callee.ret)
            transitions.setdefault(src, []).append((Fraction(1), "run", (callee_sym, k_sym)))
        elif isinstance(point, PReturn):
            if point.expr is None:
                value = "unit" if code.ret == "void" else None
                if value is None:
                    raise TranslateError(f"{proc_name} returns without a value")
            else:
                value = _eval(point.expr, code, store, int_max)
            state = materialize_ret(value)
            transitions.setdefault(src, []).append((Fraction(1), state, ()))
        else:
            raise AssertionError(f"unknown point {point!r}")

    states = ("run", *ret_states)
    merged = {key: _merge_rules(rules) for key, rules in transitions.items()}
    automaton = Ppda(states, tuple(symbol_order), merged)
    value_map = {state: _value_text(v) for state, v in ret_values.items()}
    return automaton, ("run", init_symbol), value_map


def _merge_rules(rules):
    grouped: dict[tuple, Fraction] = {}
    for p, r, alpha in rules:
        grouped[(r, alpha)] = grouped.get((r, alpha), Fraction(0)) + p
    return tuple((p, r, alpha) for (r, alpha), p in grouped.items())


def _set(store: tuple, idx: int, value) -> tuple:
    out = list(store)
    out[idx] = value
    return tuple(out)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "t" if v else "f"
    return str(v)


def _value_text(v) -> str:
    if v == "unit":
        return "unit"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)
