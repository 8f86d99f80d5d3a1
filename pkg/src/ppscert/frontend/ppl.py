"""The pPL mini-language: lexer, parser and static checks.

A program is a list of procedures in a Java-like syntax followed by one
main block.  Types are bool and a bounded int (0..int_max, wrapping);
probabilistic choice enters through `flip(p)`, `uniform(n)`,
`prob { p1: stmt ... pn: stmt }` blocks, and parenthesized choice
expressions `(p1: e1 | p2: e2)`.  Recursion is the only source of
unbounded behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..errors import ParseError

KEYWORDS = {
    "void", "bool", "int", "if", "else", "while", "prob",
    "return", "true", "false", "flip", "uniform",
}
TYPES = ("void", "bool", "int")
DEFAULT_INT_MAX = 255

_TWO_CHAR = ("//", "<=", ">=", "==", "!=")
_ONE_CHAR = "{}();:,|=!<>+-%"


@dataclass
class Token:
    kind: str  # 'ident', 'kw', 'int', 'dec', or the symbol itself
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token(two, two, line, col))
            i += 2
            col += 2
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                tokens.append(Token("dec", text[i:j], line, col))
            else:
                tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass
class PConst:
    value: Fraction


@dataclass
class PRatio:
    num: "Expr"
    den: "Expr"


@dataclass
class PCompl:  # 1 - inner, introduced when lowering flip()
    inner: "PExpr"


PExpr = PConst | PRatio | PCompl


@dataclass
class IntLit:
    value: int
    line: int = 0


@dataclass
class BoolLit:
    value: bool
    line: int = 0


@dataclass
class Var:
    name: str
    line: int = 0


@dataclass
class Not:
    operand: "Expr"
    line: int = 0


@dataclass
class Bin:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = 0


@dataclass
class Flip:
    prob: PExpr
    line: int = 0


@dataclass
class Uniform:
    bound: int
    line: int = 0


@dataclass
class CallE:
    name: str
    args: list
    line: int = 0


@dataclass
class Choice:
    arms: list  # (PExpr, Expr)
    line: int = 0


Expr = IntLit | BoolLit | Var | Not | Bin | Flip | Uniform | CallE | Choice


@dataclass
class Decl:
    type: str
    name: str
    expr: Expr
    line: int = 0


@dataclass
class Assign:
    name: str
    expr: Expr
    line: int = 0


@dataclass
class If:
    cond: Expr
    then: list
    els: list | None
    line: int = 0


@dataclass
class While:
    cond: Expr
    body: list
    line: int = 0


@dataclass
class ProbStmt:
    arms: list  # (PExpr, list of statements)
    line: int = 0


@dataclass
class ExprStmt:
    expr: Expr
    line: int = 0


@dataclass
class Return:
    expr: Expr | None
    line: int = 0


Stmt = Decl | Assign | If | While | ProbStmt | ExprStmt | Return


@dataclass
class Proc:
    name: str
    params: list  # (type, name)
    ret: str
    body: list
    line: int = 0


@dataclass
class Program:
    procs: dict
    order: list
    main: list
    int_max: int = DEFAULT_INT_MAX
    main_ret: str = "void"


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset=0) -> Token | None:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise ParseError("unexpected end of input", last.line if last else None)
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def at(self, kind: str, text=None) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    # -- program structure --

    def parse_program(self) -> Program:
        procs: dict[str, Proc] = {}
        order = []
        main = None
        while self.peek() is not None:
            tok = self.peek()
            if tok.kind == "kw" and tok.text in TYPES:
                proc = self.parse_proc()
                if proc.name in procs:
                    raise ParseError(f"duplicate procedure {proc.name!r}", proc.line)
                procs[proc.name] = proc
                order.append(proc.name)
            elif tok.kind == "{":
                if main is not None:
                    raise ParseError("second main block", tok.line, tok.col)
                main = self.parse_block()
            else:
                raise ParseError(
                    f"expected a procedure or the main block, found {tok.text!r}",
                    tok.line, tok.col,
                )
        if main is None:
            raise ParseError("missing main block")
        return Program(procs, order, main)

    def parse_proc(self) -> Proc:
        ret = self.next()
        name = self.expect("ident")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ty = self.next()
                if ty.kind != "kw" or ty.text not in ("bool", "int"):
                    raise ParseError("parameter type must be bool or int", ty.line, ty.col)
                pname = self.expect("ident")
                params.append((ty.text, pname.text))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        body = self.parse_block()
        return Proc(name.text, params, ret.text, body, line=ret.line)

    def parse_block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    # -- statements --

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        if tok.kind == "{":
            # a bare block contributes its statements in sequence
            inner = self.parse_block()
            return If(BoolLit(True, tok.line), inner, None, line=tok.line)
        if tok.kind == "kw" and tok.text == "if":
            return self.parse_if()
        if tok.kind == "kw" and tok.text == "while":
            self.next()
            cond = self.parse_expr()
            body = self.parse_stmt_as_block()
            return While(cond, body, line=tok.line)
        if tok.kind == "kw" and tok.text == "prob":
            return self.parse_prob()
        if tok.kind == "kw" and tok.text == "return":
            self.next()
            if self.at(";"):
                self.next()
                return Return(None, line=tok.line)
            expr = self.parse_expr()
            self.expect(";")
            return Return(expr, line=tok.line)
        if tok.kind == "kw" and tok.text in ("bool", "int"):
            self.next()
            name = self.expect("ident")
            self.expect("=")
            expr = self.parse_expr()
            self.expect(";")
            return Decl(tok.text, name.text, expr, line=tok.line)
        if tok.kind == "ident" and self.peek(1) is not None and self.peek(1).kind == "=":
            self.next()
            self.next()
            expr = self.parse_expr()
            self.expect(";")
            return Assign(tok.text, expr, line=tok.line)
        expr = self.parse_expr()
        self.expect(";")
        return ExprStmt(expr, line=tok.line)

    def parse_stmt_as_block(self) -> list:
        if self.at("{"):
            return self.parse_block()
        return [self.parse_stmt()]

    def parse_if(self) -> If:
        tok = self.next()
        cond = self.parse_expr()
        then = self.parse_stmt_as_block()
        els = None
        if self.at("kw", "else"):
            self.next()
            els = self.parse_stmt_as_block()
        return If(cond, then, els, line=tok.line)

    def parse_prob(self) -> ProbStmt:
        tok = self.next()
        self.expect("{")
        arms = []
        while not self.at("}"):
            p = self.parse_pexpr()
            self.expect(":")
            arms.append((p, self.parse_stmt_as_block()))
        self.expect("}")
        if not arms:
            raise ParseError("prob block needs at least one arm", tok.line, tok.col)
        return ProbStmt(arms, line=tok.line)

    # -- probabilities --

    def parse_pexpr(self) -> PExpr:
        tok = self.peek()
        if tok is not None and tok.kind == "dec":
            self.next()
            return PConst(Fraction(tok.text))
        num = self.parse_add()
        if self.at("//"):
            self.next()
            den = self.parse_add()
            if isinstance(num, IntLit) and isinstance(den, IntLit):
                if den.value == 0:
                    raise ParseError("zero denominator", tok.line, tok.col)
                return PConst(Fraction(num.value, den.value))
            return PRatio(num, den)
        if isinstance(num, IntLit):
            return PConst(Fraction(num.value))
        raise ParseError("expected a probability", tok.line, tok.col)

    # -- expressions --

    def parse_expr(self) -> Expr:
        left = self.parse_add()
        tok = self.peek()
        if tok is not None and tok.kind in ("<", "<=", ">", ">=", "==", "!="):
            self.next()
            right = self.parse_add()
            return Bin(tok.kind, left, right, line=tok.line)
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mod()
        while self.at("+") or self.at("-"):
            op = self.next()
            right = self.parse_mod()
            left = Bin(op.kind, left, right, line=op.line)
        return left

    def parse_mod(self) -> Expr:
        left = self.parse_unary()
        while self.at("%"):
            op = self.next()
            right = self.parse_unary()
            left = Bin("%", left, right, line=op.line)
        return left

    def parse_unary(self) -> Expr:
        if self.at("!"):
            tok = self.next()
            return Not(self.parse_unary(), line=tok.line)
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.next()
        if tok.kind == "int":
            return IntLit(int(tok.text), line=tok.line)
        if tok.kind == "kw" and tok.text in ("true", "false"):
            return BoolLit(tok.text == "true", line=tok.line)
        if tok.kind == "kw" and tok.text == "flip":
            self.expect("(")
            p = self.parse_pexpr()
            self.expect(")")
            return Flip(p, line=tok.line)
        if tok.kind == "kw" and tok.text == "uniform":
            self.expect("(")
            bound = self.expect("int")
            self.expect(")")
            return Uniform(int(bound.text), line=tok.line)
        if tok.kind == "ident":
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if self.at(","):
                            self.next()
                            continue
                        break
                self.expect(")")
                return CallE(tok.text, args, line=tok.line)
            return Var(tok.text, line=tok.line)
        if tok.kind == "(":
            choice = self._try_choice(tok)
            if choice is not None:
                return choice
            expr = self.parse_expr()
            self.expect(")")
            return expr
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)

    def _try_choice(self, open_tok: Token) -> Choice | None:
        # distinguishes '(p1: e1 | p2: e2)' from a parenthesized expression
        saved = self.pos
        try:
            p = self.parse_pexpr()
            if not self.at(":"):
                raise ParseError("not a choice")
        except ParseError:
            self.pos = saved
            return None
        self.next()
        arms = [(p, self.parse_expr())]
        while self.at("|"):
            self.next()
            p = self.parse_pexpr()
            self.expect(":")
            arms.append((p, self.parse_expr()))
        self.expect(")")
        return Choice(arms, line=open_tok.line)


# ---------------------------------------------------------------------------
# static checks


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.sigs = {
            name: ([t for t, _ in proc.params], proc.ret)
            for name, proc in program.procs.items()
        }

    def run(self):
        for name in self.program.order:
            proc = self.program.procs[name]
            env = {}
            for ty, pname in proc.params:
                if pname in env:
                    raise ParseError(f"duplicate parameter {pname!r}", proc.line)
                env[pname] = ty
            self.check_block(proc.body, env, proc.ret, proc.name)
            if proc.ret != "void" and not _always_returns(proc.body):
                raise ParseError(
                    f"procedure {proc.name!r} may fall off the end without returning",
                    proc.line,
                )
        # the main block's return type is inferred from its return statements
        self._main_ret = None
        self.check_block(self.program.main, {}, "pending", "<main>")
        self.program.main_ret = self._main_ret or "void"

    def check_block(self, stmts, env, ret_type, where):
        for stmt in stmts:
            self.check_stmt(stmt, env, ret_type, where)

    def check_stmt(self, stmt, env, ret_type, where):
        if isinstance(stmt, Decl):
            if stmt.name in env:
                raise ParseError(f"variable {stmt.name!r} already declared", stmt.line)
            ty = self.type_of(stmt.expr, env)
            if ty != stmt.type:
                raise ParseError(
                    f"cannot initialize {stmt.type} {stmt.name!r} from {ty}", stmt.line
                )
            env[stmt.name] = stmt.type
        elif isinstance(stmt, Assign):
            if stmt.name not in env:
                raise ParseError(f"assignment to undeclared {stmt.name!r}", stmt.line)
            ty = self.type_of(stmt.expr, env)
            if ty != env[stmt.name]:
                raise ParseError(f"type mismatch assigning to {stmt.name!r}", stmt.line)
        elif isinstance(stmt, If):
            if self.type_of(stmt.cond, env) != "bool":
                raise ParseError("if condition must be bool", stmt.line)
            self.check_block(stmt.then, dict(env), ret_type, where)
            if stmt.els is not None:
                self.check_block(stmt.els, dict(env), ret_type, where)
        elif isinstance(stmt, While):
            if self.type_of(stmt.cond, env) != "bool":
                raise ParseError("while condition must be bool", stmt.line)
            self.check_block(stmt.body, dict(env), ret_type, where)
        elif isinstance(stmt, ProbStmt):
            total = Fraction(0)
            all_const = True
            for p, body in stmt.arms:
                self.check_pexpr(p, env, stmt.line)
                if isinstance(p, PConst):
                    total += p.value
                else:
                    all_const = False
                self.check_block(body, dict(env), ret_type, where)
            if all_const and total != 1:
                raise ParseError(f"prob arm probabilities sum to {total}, not 1", stmt.line)
        elif isinstance(stmt, ExprStmt):
            self.type_of(stmt.expr, env)
        elif isinstance(stmt, Return):
            if ret_type == "pending":
                ty = "void" if stmt.expr is None else self.type_of(stmt.expr, env)
                if self._main_ret is None:
                    self._main_ret = ty
                elif self._main_ret != ty:
                    raise ParseError("main block returns values of different types", stmt.line)
                return
            if stmt.expr is None:
                if ret_type != "void":
                    raise ParseError(f"{where} must return a {ret_type}", stmt.line)
            else:
                if ret_type == "void":
                    raise ParseError(f"{where} is void and cannot return a value", stmt.line)
                ty = self.type_of(stmt.expr, env)
                if ty != ret_type:
                    raise ParseError(f"{where} returns {ret_type}, found {ty}", stmt.line)
        else:
            raise AssertionError(f"unknown statement {stmt!r}")

    def check_pexpr(self, p, env, line):
        if isinstance(p, PConst):
            if not (0 <= p.value <= 1):
                raise ParseError(f"probability {p.value} outside [0, 1]", line)
        elif isinstance(p, PRatio):
            for side in (p.num, p.den):
                if self.type_of(side, env) != "int":
                    raise ParseError("probability ratio operands must be int", line)
                if _has_effects(side):
                    raise ParseError("probability expressions must be pure", line)
        elif isinstance(p, PCompl):
            self.check_pexpr(p.inner, env, line)

    def type_of(self, expr, env) -> str:
        if isinstance(expr, IntLit):
            if not (0 <= expr.value <= self.program.int_max):
                raise ParseError(
                    f"int literal {expr.value} outside 0..{self.program.int_max}",
                    expr.line,
                )
            return "int"
        if isinstance(expr, BoolLit):
            return "bool"
        if isinstance(expr, Var):
            if expr.name not in env:
                raise ParseError(f"undeclared variable {expr.name!r}", expr.line)
            return env[expr.name]
        if isinstance(expr, Not):
            if self.type_of(expr.operand, env) != "bool":
                raise ParseError("'!' needs a bool operand", expr.line)
            return "bool"
        if isinstance(expr, Bin):
            lt = self.type_of(expr.left, env)
            rt = self.type_of(expr.right, env)
            if lt != "int" or rt != "int":
                raise ParseError(f"operator {expr.op!r} needs int operands", expr.line)
            return "bool" if expr.op in ("<", "<=", ">", ">=", "==", "!=") else "int"
        if isinstance(expr, Flip):
            self.check_pexpr(expr.prob, env, expr.line)
            return "bool"
        if isinstance(expr, Uniform):
            if expr.bound < 1:
                raise ParseError("uniform(n) needs n >= 1", expr.line)
            if expr.bound - 1 > self.program.int_max:
                raise ParseError("uniform(n) exceeds the int domain", expr.line)
            return "int"
        if isinstance(expr, CallE):
            if expr.name not in self.sigs:
                raise ParseError(f"unknown procedure {expr.name!r}", expr.line)
            param_types, ret = self.sigs[expr.name]
            if len(expr.args) != len(param_types):
                raise ParseError(
                    f"{expr.name} expects {len(param_types)} arguments", expr.line
                )
            for arg, want in zip(expr.args, param_types):
                if self.type_of(arg, env) != want:
                    raise ParseError(f"argument type mismatch calling {expr.name}", expr.line)
            return ret
        if isinstance(expr, Choice):
            types = set()
            total = Fraction(0)
            all_const = True
            for p, arm in expr.arms:
                self.check_pexpr(p, env, expr.line)
                if isinstance(p, PConst):
                    total += p.value
                else:
                    all_const = False
                types.add(self.type_of(arm, env))
            if len(types) != 1:
                raise ParseError("choice arms must share one type", expr.line)
            if all_const and total != 1:
                raise ParseError(f"choice probabilities sum to {total}, not 1", expr.line)
            return types.pop()
        raise AssertionError(f"unknown expression {expr!r}")


def _always_returns(stmts) -> bool:
    for stmt in stmts:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and stmt.els is not None:
            if _always_returns(stmt.then) and _always_returns(stmt.els):
                return True
        if isinstance(stmt, ProbStmt):
            if all(_always_returns(body) for _, body in stmt.arms):
                return True
    return False


def _has_effects(expr) -> bool:
    if isinstance(expr, (Flip, Uniform, CallE, Choice)):
        return True
    if isinstance(expr, Not):
        return _has_effects(expr.operand)
    if isinstance(expr, Bin):
        return _has_effects(expr.left) or _has_effects(expr.right)
    return False


def parse_program(text: str, int_max: int = DEFAULT_INT_MAX) -> Program:
    """Parse and statically check a pPL program."""
    program = _Parser(tokenize(text)).parse_program()
    program.int_max = int_max
    _Checker(program).run()
    return program
