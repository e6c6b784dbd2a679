"""Macro expansion over three phases: run, compile levels, and edit.

Module elaboration is a one-and-a-half pass process.  The first pass walks
the top-level forms in order, registering syntax transformers and editor
elaborators and routing phase-specific code to its home (compile evaluation,
the edit submodule, named submodules).  The second pass fully expands what
remains.  Editor literals expand by a five step procedure (recognize,
deserialize, locate, invoke, splice) wherever they occur, and the residue is
expanded again.
"""

from .editor_form import EditorValue
from .errors import (ElaboratorError, EvaluationError, ExpansionCycle,
                     IsynthError, MalformedPattern, NotTopLevel,
                     SyntaxDiagnostic, UnboundMacro, UnresolvedBinding)
from .evaluator import Env, EvalContext, apply_function, eval_body, eval_syntax, special
from .printer import write_form
from .syntax import (EDITOR, LIST, SYMBOL, Syntax, gensym, mark, reskin,
                     slist, sym)
from .values import Builtin, Closure, NativeObject, VOID

MAX_EXPANSION_DEPTH = 1000

FIVE_STEPS = ("recognize", "deserialize", "locate", "invoke", "splice")

# Core heads the expander recognizes structurally (not user-definable).
CORE_HEADS = {
    "quote", "quasiquote", "unquote", "unquote-splicing",
    "syntax", "quasisyntax", "unsyntax", "unsyntax-splicing",
    "if", "begin", "define", "lambda", "let", "let*", "set!", "and", "or",
    "struct", "new", "send", "super-new", "match",
    "define-syntax", "begin-for-syntax",
    "define-interactive-syntax", "define-interactive-syntax-mixin",
    "define-state", "define-elaborator", "define-elaborate",
    "begin-for-interactive-syntax",
    "define/public", "define/override", "define/augment",
    "module+", "require", "provide",
    "%class", "%mixin",
}

_mark_counter = [0]


def fresh_mark():
    _mark_counter[0] += 1
    return _mark_counter[0]


class RulesTransformer:
    """Declarative rewrite rules with literals and ellipsis patterns."""

    def __init__(self, literals, rules, name="rules"):
        self.literals = set(literals)
        self.rules = rules  # [(pattern Syntax, template Syntax)]
        self.name = name

    def __repr__(self):
        return f"#<syntax-rules:{self.name}>"

    def expand(self, stx, ctx):
        for pattern, template in self.rules:
            bindings = {}
            if match_pattern(pattern, stx, self.literals, bindings):
                return fill_template(template, bindings)
        raise UnboundMacro(f"{self.name}: no matching rule for {write_form(stx)}",
                           stx.span)


class _Ellipsis:
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = items


def match_pattern(pat, stx, literals, bindings):
    if pat.kind == SYMBOL:
        name = pat.value
        if name == "_":
            return True
        if name in literals:
            return stx.kind == SYMBOL and stx.value == name
        bindings[name] = stx
        return True
    if pat.kind == LIST:
        if stx.kind != LIST:
            return False
        pchildren = list(pat.children)
        ell = next((i for i, c in enumerate(pchildren)
                    if c.is_symbol("...")), None)
        schildren = list(stx.children)
        if ell is None:
            if len(pchildren) != len(schildren):
                return False
            return all(match_pattern(p, s, literals, bindings)
                       for p, s in zip(pchildren, schildren))
        if ell == 0:
            return False
        before = pchildren[:ell - 1]
        ell_pat = pchildren[ell - 1]
        after = pchildren[ell + 1:]
        if len(schildren) < len(before) + len(after):
            return False
        for p, s in zip(before, schildren[:len(before)]):
            if not match_pattern(p, s, literals, bindings):
                return False
        tail = schildren[len(schildren) - len(after):] if after else []
        middle = schildren[len(before):len(schildren) - len(after)]
        for p, s in zip(after, tail):
            if not match_pattern(p, s, literals, bindings):
                return False
        collected = []
        for s in middle:
            sub = {}
            if not match_pattern(ell_pat, s, literals, sub):
                return False
            collected.append(sub)
        for var in pattern_vars(ell_pat, literals):
            bindings[var] = _Ellipsis([c.get(var) for c in collected])
        return True
    # atom pattern
    return (stx.kind == pat.kind and stx.value == pat.value)


def pattern_vars(pat, literals):
    if pat.kind == SYMBOL:
        if pat.value in literals or pat.value in ("_", "..."):
            return set()
        return {pat.value}
    out = set()
    for c in pat.children:
        out |= pattern_vars(c, literals)
    return out


def fill_template(tmpl, bindings):
    if tmpl.kind == SYMBOL:
        bound = bindings.get(tmpl.value)
        if bound is None:
            return tmpl
        if isinstance(bound, _Ellipsis):
            raise UnboundMacro(
                f"pattern variable {tmpl.value} used without ellipsis", tmpl.span)
        return bound
    if tmpl.kind != LIST:
        return tmpl
    out = []
    children = list(tmpl.children)
    i = 0
    while i < len(children):
        c = children[i]
        if i + 1 < len(children) and children[i + 1].is_symbol("..."):
            seq_vars = [v for v in pattern_vars(c, set())
                        if isinstance(bindings.get(v), _Ellipsis)]
            if not seq_vars:
                raise UnboundMacro("ellipsis template without sequence variable",
                                   c.span)
            lengths = {len(bindings[v].items) for v in seq_vars}
            if len(lengths) != 1:
                raise UnboundMacro("mismatched ellipsis lengths", c.span)
            for k in range(lengths.pop()):
                slice_bindings = dict(bindings)
                for v in seq_vars:
                    slice_bindings[v] = bindings[v].items[k]
                out.append(fill_template(c, slice_bindings))
            i += 2
            continue
        out.append(fill_template(c, bindings))
        i += 1
    return tmpl.with_children(tuple(out))


@special("syntax-rules")
def _syntax_rules(stx, env, ctx, tail):
    if len(stx.children) < 2 or stx.children[1].kind != LIST:
        raise EvaluationError("syntax-rules: bad shape", stx.span)
    literals = [c.value for c in stx.children[1].children if c.kind == SYMBOL]
    rules = []
    for rule in stx.children[2:]:
        if rule.kind != LIST or len(rule.children) != 2:
            raise EvaluationError("syntax-rules: each rule is (pattern template)",
                                  rule.span)
        rules.append((rule.children[0], rule.children[1]))
    return RulesTransformer(literals, rules)


class ProcTransformer:
    def __init__(self, closure, name, ctx):
        self.closure = closure
        self.name = name
        self.ctx = ctx

    def expand(self, stx, ctx):
        result = apply_function(self.closure, [stx], self.ctx)
        if not isinstance(result, Syntax):
            raise UnboundMacro(
                f"{self.name}: transformer must return syntax", stx.span)
        return result


class Elaborator:
    """Compile-time half of an editor definition."""

    def __init__(self, class_name, parent_name, this_param, body, env,
                 visible_specs, module_id):
        self.name = f"{class_name}:elaborator"
        self.class_name = class_name
        self.parent_name = parent_name
        self.this_param = this_param
        self.body = body  # None when inherited
        self.env = env
        self.visible_specs = visible_specs
        self.module_id = module_id
        self.pending_expander = None  # set while the body is still unexpanded

    def describe(self):
        return {"name": self.name, "chained-to":
                f"{self.parent_name}:elaborator" if self.parent_name else None}


class EditorDefMeta:
    """What the kernel knows about a definition without instantiating it."""

    __slots__ = ("name", "base_name", "state_specs", "module_path",
                 "mixin_names")

    def __init__(self, name, base_name, state_specs, module_path):
        self.name = name
        self.base_name = base_name
        self.state_specs = state_specs
        self.module_path = module_path
        self.mixin_names = []


class ExpandedModule:
    def __init__(self, path, module_id):
        self.path = path
        self.module_id = module_id
        self.requires = []            # [(path string, span)]
        self.run_forms = []           # expanded core forms
        self.run_provides = []
        self.macro_tables = {}        # level -> {name: transformer}
        self.elaborators = {}         # class name -> Elaborator
        self.editor_defs = {}         # class name -> EditorDefMeta
        self.edit_forms = []          # expanded edit-submodule forms
        self.edit_requires = []
        self.edit_provides = []
        self.submodules = {}          # name -> [expanded forms]
        self.compile_envs = {}        # level -> Env
        self.rendered = []            # forms in display order
        self.trace = []               # [(editor key, step name)]
        self.editor_reports = []
        self.diagnostics = []

    def submodule_names(self):
        names = list(self.submodules)
        if self.edit_forms or self.edit_provides or self.edit_requires:
            names.append("edit")
        return names

    def render_text(self):
        from .printer import write_module
        tree = Syntax(LIST, "module", tuple(self.rendered))
        return write_module(tree)

    def golden_structure(self):
        """Structural summary: the elaboration split, for golden comparison."""
        return {
            "compile-definitions": sorted(
                list(self.macro_tables.get(0, {}))
                + [e.name for e in self.elaborators.values()]),
            "elaborators": {e.name: e.describe()["chained-to"]
                            for e in self.elaborators.values()},
            "editors": [
                {"binding": r["binding"], "elaborator": r["elaborator"],
                 "residue": r["residue"]}
                for r in self.editor_reports],
            "edit": {"provides": list(self.edit_provides),
                     "forms": [write_form(f) for f in self.edit_forms]},
            "run": [write_form(f) for f in self.run_forms],
            "submodules": {name: [write_form(f) for f in forms]
                           for name, forms in self.submodules.items()},
        }


class ModuleExpander:
    def __init__(self, kernel, path, module_id, tolerant=False):
        self.kernel = kernel
        self.path = path
        self.out = ExpandedModule(path, module_id)
        self.tolerant = tolerant
        self.depth = 0
        self.run_defined_names = set()
        self._editor_seq = 0

    # -- helpers -------------------------------------------------------------

    def macro_for(self, name, level=0):
        tables = [self.out.macro_tables.get(level)]
        if level != 0:
            # level-0 sugar (when, cond, for/list ...) serves every level
            tables.append(self.out.macro_tables.get(0))
        prelude = self.kernel.prelude_module
        if prelude is not None and prelude is not self.out:
            tables.append(prelude.macro_tables.get(level))
            if level != 0:
                tables.append(prelude.macro_tables.get(0))
        for table in tables:
            if table and name in table:
                return table[name]
        return None

    def compile_env(self, level=1):
        env = self.out.compile_envs.get(level)
        if env is None:
            env = Env(self.kernel.compile_base_env())
            self.out.compile_envs[level] = env
        return env

    def compile_ctx(self, level=1):
        fallback = Env(None, {n: True for n in self.run_defined_names})
        ctx = EvalContext(self.kernel, phase=("compile", level),
                          phase_fallback=fallback)
        ctx.expander = self
        return ctx

    def diagnostic(self, err):
        if self.tolerant:
            self.out.diagnostics.append(err)
            return True
        raise err

    # -- top level -----------------------------------------------------------

    def expand_module(self, tree):
        forms = self.scan_pass(list(tree.children))
        for kind, payload in forms:
            if kind == "deferred":
                self.expand_top_form(payload)
            elif kind == "interactive":
                self.process_interactive(payload)
            elif kind == "begin-edit":
                self.process_begin_for_interactive(payload)
        for name, bodies in list(self.out.submodules.items()):
            self.out.submodules[name] = [self.expand_expr(b, 0) for b in bodies]
        for name in self.out.submodules:
            self.out.rendered.append(
                slist([sym("module+"), sym(name)] + self.out.submodules[name]))
        return self.out

    def scan_pass(self, forms):
        """Pass 1: route forms, register transformers, collect definitions."""
        queue = list(forms)
        out = []
        while queue:
            form = queue.pop(0)
            form = self.partial_expand(form)
            head = form.head_name()
            if head == "begin":
                queue = list(form.children[1:]) + queue
                continue
            if head == "define-syntax":
                self.process_define_syntax(form, level=0)
                self.out.rendered.append(form)
                continue
            if head == "begin-for-syntax":
                self.process_begin_for_syntax(form, level=1)
                self.out.rendered.append(form)
                continue
            if head in ("define-interactive-syntax",
                        "define-interactive-syntax-mixin"):
                self.pre_register_interactive(form)
                out.append(("interactive", form))
                self.out.rendered.append(form)
                continue
            if head == "begin-for-interactive-syntax":
                out.append(("begin-edit", form))
                self.out.rendered.append(form)
                continue
            if head == "module+":
                if len(form.children) < 2 or form.children[1].kind != SYMBOL:
                    raise EvaluationError("module+: bad shape", form.span)
                name = form.children[1].value
                self.out.submodules.setdefault(name, []).extend(form.children[2:])
                continue
            if head == "require":
                for spec in form.children[1:]:
                    if spec.kind != "string":
                        raise EvaluationError(
                            "require: expected a module path string", spec.span)
                    self.out.requires.append((spec.value, spec.span))
                self.out.rendered.append(form)
                continue
            if head == "provide":
                for spec in form.children[1:]:
                    if spec.kind != SYMBOL:
                        raise EvaluationError("provide: expected identifiers",
                                              spec.span)
                    self.out.run_provides.append(spec.value)
                self.out.rendered.append(form)
                continue
            if head == "define":
                target = form.children[1] if len(form.children) > 1 else None
                if target is not None:
                    if target.kind == SYMBOL:
                        self.run_defined_names.add(target.value)
                    elif target.kind == LIST and target.children:
                        self.run_defined_names.add(target.children[0].value)
            if head == "struct" and len(form.children) > 1:
                self.run_defined_names.add(form.children[1].value)
            out.append(("deferred", form))
        return out

    def partial_expand(self, form):
        """Expand known macros at the head until a non-macro form appears."""
        for _ in range(MAX_EXPANSION_DEPTH):
            head = form.head_name()
            if head is None or head in CORE_HEADS:
                return form
            transformer = self.macro_for(head, 0)
            if transformer is None:
                return form
            form = self.apply_transformer(transformer, form)
        raise ExpansionCycle(f"macro expansion did not settle: {form.head_name()}",
                             form.span)

    def apply_transformer(self, transformer, form):
        m = fresh_mark()
        marked = mark(form, m)
        try:
            result = transformer.expand(marked, None)
        except IsynthError:
            raise
        except RecursionError:
            raise ExpansionCycle("transformer recursed too deep", form.span) from None
        return mark(result, m)

    def expand_top_form(self, form):
        if form.kind == EDITOR:
            # an editor at top level may splice in whole definitions
            residue = self.expand_editor(form, 0)
            for piece in self.splice_sequence(residue):
                self.process_spliced_top(piece)
            return
        head = form.head_name()
        if head == "define":
            expanded = self.expand_define(form, 0)
            self.out.run_forms.append(expanded)
            self.out.rendered.append(expanded)
            return
        if head == "struct":
            self.out.run_forms.append(form)
            self.out.rendered.append(form)
            return
        expanded = self.expand_expr(form, 0)
        for piece in self.splice_sequence(expanded):
            self.out.run_forms.append(piece)
            self.out.rendered.append(piece)

    def process_spliced_top(self, piece):
        """Route a top-level splice through the pass-1 classification."""
        piece = self.partial_expand(piece)
        head = piece.head_name()
        if head == "define-syntax":
            self.process_define_syntax(piece, level=0)
            self.out.rendered.append(piece)
            return
        if head == "begin-for-syntax":
            self.process_begin_for_syntax(piece, level=1)
            self.out.rendered.append(piece)
            return
        if head in ("define-interactive-syntax", "define-interactive-syntax-mixin"):
            self.pre_register_interactive(piece)
            self.process_interactive(piece)
            self.out.rendered.append(piece)
            return
        if head == "begin-for-interactive-syntax":
            self.process_begin_for_interactive(piece)
            self.out.rendered.append(piece)
            return
        if head == "module+":
            if len(piece.children) >= 2 and piece.children[1].kind == SYMBOL:
                self.out.submodules.setdefault(
                    piece.children[1].value, []).extend(piece.children[2:])
            return
        if head == "require":
            for spec in piece.children[1:]:
                if spec.kind == "string":
                    self.out.requires.append((spec.value, spec.span))
            self.out.rendered.append(piece)
            return
        if head == "provide":
            self.out.run_provides.extend(
                c.value for c in piece.children[1:] if c.kind == SYMBOL)
            self.out.rendered.append(piece)
            return
        self.expand_top_form(piece)

    def splice_sequence(self, form):
        if form.head_name() == "begin":
            out = []
            for c in form.children[1:]:
                out.extend(self.splice_sequence(c))
            return out
        return [form]

    def expand_define(self, form, level):
        if len(form.children) < 3:
            raise EvaluationError("define: bad shape", form.span)
        target = form.children[1]
        if target.kind == SYMBOL:
            value = self.expand_expr(form.children[2], level)
            return form.with_children((form.children[0], target, value))
        body = tuple(self.expand_expr(b, level) for b in form.children[2:])
        return form.with_children((form.children[0], target) + body)

    # -- transformers ----------------------------------------------------------

    def process_define_syntax(self, form, level):
        if len(form.children) < 3:
            raise EvaluationError("define-syntax: bad shape", form.span)
        target = form.children[1]
        env = self.compile_env(level + 1)
        ctx = self.compile_ctx(level + 1)
        table = self.out.macro_tables.setdefault(level, {})
        if target.kind == LIST and target.children \
                and target.children[0].kind == SYMBOL:
            name = target.children[0].value
            params = [c.value for c in target.children[1:]]
            body = [self.expand_expr(b, level + 1) for b in form.children[2:]]
            closure = Closure(params, None, body, env, name)
            table[name] = ProcTransformer(closure, name, ctx)
            return
        if target.kind == SYMBOL:
            rhs = self.expand_expr(form.children[2], level + 1)
            value = eval_syntax(rhs, env, ctx)
            if isinstance(value, RulesTransformer):
                value.name = target.value
                table[target.value] = value
            elif isinstance(value, (Closure, Builtin)):
                table[target.value] = ProcTransformer(value, target.value, ctx)
            else:
                raise EvaluationError(
                    "define-syntax: not a transformer", form.span)
            return
        raise EvaluationError("define-syntax: bad target", form.span)

    def process_begin_for_syntax(self, form, level):
        env = self.compile_env(level)
        ctx = self.compile_ctx(level)
        for body in form.children[1:]:
            head = body.head_name()
            if head == "begin-for-syntax":
                self.process_begin_for_syntax(body, level + 1)
            elif head == "define-syntax":
                self.process_define_syntax(body, level)
            else:
                eval_syntax(self.expand_expr(body, level), env, ctx)

    # -- interactive-syntax forms (second half lives in interactive.py) --------

    def pre_register_interactive(self, form):
        from .interactive import pre_register
        pre_register(self, form)

    def process_interactive(self, form):
        from .interactive import expand_interactive_form
        expand_interactive_form(self, form)

    def process_begin_for_interactive(self, form):
        for body in form.children[1:]:
            head = body.head_name()
            if head == "require":
                for spec in body.children[1:]:
                    if spec.kind != "string":
                        raise EvaluationError(
                            "require: expected a module path string", spec.span)
                    self.out.edit_requires.append((spec.value, spec.span))
                continue
            if head == "provide":
                self.out.edit_provides.extend(
                    c.value for c in body.children[1:] if c.kind == SYMBOL)
                continue
            self.out.edit_forms.append(self.expand_expr(body, "edit"))

    # -- expression expansion ---------------------------------------------------

    def expand_expr(self, stx, level, depth=0):
        if depth > MAX_EXPANSION_DEPTH:
            raise ExpansionCycle("expansion depth limit exceeded", stx.span)
        if stx.kind == EDITOR:
            residue = self.expand_editor(stx, level)
            return self.expand_expr(residue, level, depth + 1)
        if stx.kind != LIST or not stx.children:
            return stx
        head = stx.children[0]
        if head.kind == SYMBOL:
            name = head.value
            if name in ("quote", "syntax-rules"):
                return stx
            if name in ("quasiquote",):
                return self.expand_qq(stx, level, 1, ("unquote", "unquote-splicing"))
            if name == "syntax":
                return stx
            if name == "quasisyntax":
                return self.expand_qq(stx, level, 1, ("unsyntax", "unsyntax-splicing"))
            if name in ("unquote", "unquote-splicing", "unsyntax",
                        "unsyntax-splicing"):
                raise EvaluationError(f"{name}: outside of template", stx.span)
            if name == "begin-for-interactive-syntax":
                raise NotTopLevel(
                    "begin-for-interactive-syntax can only appear at the module "
                    "top level", stx.span)
            if name in ("define-interactive-syntax",
                        "define-interactive-syntax-mixin"):
                raise NotTopLevel(
                    f"{name} can only appear at the module top level", stx.span)
            if name == "define-state":
                raise EvaluationError(
                    "define-state: only allowed inside an editor definition",
                    stx.span)
            if name == "match":
                compiled = self.expand_match(stx, level)
                return self.expand_expr(compiled, level, depth + 1)
            if name == "define":
                return self.expand_define(stx, level)
            if name == "lambda" and len(stx.children) >= 3:
                body = tuple(self.expand_expr(b, level) for b in stx.children[2:])
                return stx.with_children(stx.children[:2] + body)
            if name in ("let", "let*"):
                return self.expand_let(stx, level)
            if name == "send" and len(stx.children) >= 3:
                obj = self.expand_expr(stx.children[1], level)
                args = tuple(self.expand_expr(a, level) for a in stx.children[3:])
                return stx.with_children((head, obj, stx.children[2]) + args)
            if name == "new" and len(stx.children) >= 2:
                cls = self.expand_expr(stx.children[1], level)
                inits = []
                for init in stx.children[2:]:
                    if init.kind == LIST and len(init.children) == 2:
                        inits.append(init.with_children(
                            (init.children[0],
                             self.expand_expr(init.children[1], level))))
                    else:
                        inits.append(init)
                return stx.with_children((head, cls) + tuple(inits))
            if name == "set!" and len(stx.children) == 3:
                return stx.with_children(
                    (head, stx.children[1],
                     self.expand_expr(stx.children[2], level)))
            transformer = self.macro_for(name, 0 if level == "edit" else level)
            if transformer is not None:
                expanded = self.apply_transformer(transformer, stx)
                return self.expand_expr(expanded, level, depth + 1)
        children = tuple(self.expand_expr(c, level) for c in stx.children)
        return stx.with_children(children)

    def expand_let(self, stx, level):
        children = list(stx.children)
        idx = 1
        if len(children) > 2 and children[1].kind == SYMBOL:
            idx = 2  # named let
        if idx >= len(children) or children[idx].kind != LIST:
            raise EvaluationError("let: bad shape", stx.span)
        bindings = []
        for b in children[idx].children:
            if b.kind == LIST and len(b.children) == 2:
                bindings.append(b.with_children(
                    (b.children[0], self.expand_expr(b.children[1], level))))
            else:
                bindings.append(b)
        body = tuple(self.expand_expr(f, level) for f in children[idx + 1:])
        return stx.with_children(
            tuple(children[:idx]) + (children[idx].with_children(tuple(bindings)),)
            + body)

    def expand_qq(self, stx, level, depth, unquote_names):
        if stx.kind != LIST or not stx.children:
            return stx
        head = stx.children[0]
        if head.kind == SYMBOL and len(stx.children) == 2:
            name = head.value
            if name in unquote_names:
                if depth == 1:
                    return stx.with_children(
                        (head, self.expand_expr(stx.children[1], level)))
                return stx.with_children(
                    (head, self.expand_qq(stx.children[1], level, depth - 1,
                                          unquote_names)))
            if name in ("quasiquote", "quasisyntax") and (
                    (name == "quasiquote") == (unquote_names[0] == "unquote")):
                return stx.with_children(
                    (head, self.expand_qq(stx.children[1], level, depth + 1,
                                          unquote_names)))
        return stx.with_children(tuple(
            self.expand_qq(c, level, depth, unquote_names) for c in stx.children))

    # -- editor expansion: the five steps -----------------------------------------

    def expand_editor(self, node, level):
        value = node.value
        key = self.editor_key(node)
        trace = self.out.trace
        trace.append((key, "recognize"))
        state = dict(value.state)
        trace.append((key, "deserialize"))
        try:
            elaborator = self.locate_elaborator(value.binding, node.span)
        except UnresolvedBinding as e:
            trace.append((key, "locate"))
            if self.diagnostic(e):
                return slist([sym("void")], node.span)
            raise
        trace.append((key, "locate"))
        self.out.editor_reports.append({
            "binding": value.binding.to_json(),
            "elaborator": elaborator.name,
            "residue": None,
            "span": node.span,
        })
        report = self.out.editor_reports[-1]
        try:
            residue = self.invoke_elaborator(elaborator, state, node.span)
        except (ElaboratorError, SyntaxDiagnostic) as e:
            trace.append((key, "invoke"))
            err = e if isinstance(e, ElaboratorError) else \
                ElaboratorError(e.message, node.span)
            if err.span is None:
                err.span = node.span
            if self.diagnostic(err):
                trace.append((key, "splice"))
                report["residue"] = "(void)"
                return slist([sym("void")], node.span)
            raise
        trace.append((key, "invoke"))
        residue = reskin(residue, node.span)
        report["residue"] = write_form(residue)
        trace.append((key, "splice"))
        return residue

    def editor_key(self, node):
        span = node.span
        if span.file == "<synthetic>":
            self._editor_seq += 1
            return f"{self.out.module_id}:generated:{self._editor_seq}"
        return f"{span.file}:{span.start}"

    def locate_elaborator(self, binding, span):
        if binding.module_path is None:
            elab = self.out.elaborators.get(binding.name)
            if elab is None:
                elab = self.kernel.prelude_elaborator(binding.name)
            if elab is None:
                raise UnresolvedBinding(
                    f"no local editor definition named {binding.name}", span)
            return self.resolve_elaborator_chain(elab, span)
        try:
            dep = self.kernel.load_module(binding.module_path,
                                          relative_to=self.path)
        except (OSError, IsynthError) as e:
            raise UnresolvedBinding(
                f"cannot load module {binding.module_path!r}: {e}", span) from None
        elab = dep.elaborators.get(binding.name)
        if elab is None:
            raise UnresolvedBinding(
                f"module {binding.module_path!r} does not define editor "
                f"{binding.name}", span)
        return self.resolve_elaborator_chain(elab, span, dep)

    def resolve_elaborator_chain(self, elab, span, owner=None):
        """Walk base-chain elaborators until one has a body of its own."""
        seen = set()
        while elab.body is None:
            if elab.class_name in seen:
                raise UnresolvedBinding(
                    f"elaborator chain for {elab.class_name} is circular", span)
            seen.add(elab.class_name)
            parent = elab.parent_name
            if parent is None:
                return self.kernel.base_elaborator
            nxt = None
            if owner is not None:
                nxt = owner.elaborators.get(parent)
            if nxt is None:
                nxt = self.out.elaborators.get(parent)
            if nxt is None:
                nxt = self.kernel.prelude_elaborator(parent)
            if nxt is None:
                return self.kernel.base_elaborator
            elab = nxt
        return elab

    def invoke_elaborator(self, elab, state, span):
        if elab.body is None:  # the root default
            return slist([sym("void")], span)
        if elab.pending_expander is not None:
            exp = elab.pending_expander
            elab.pending_expander = None
            elab.body = [exp.expand_expr(b, 1) for b in elab.body]
        view = make_state_view(elab, state, self, span)
        env = Env(elab.env, {elab.this_param: view})
        ctx = self.compile_ctx(1)
        try:
            result = eval_body(list(elab.body), env, ctx)
        except SyntaxDiagnostic as e:
            raise ElaboratorError(e.message, span) from None
        except IsynthError as e:
            raise ElaboratorError(
                f"elaborator {elab.name} failed: {e.message}", span) from None
        except RecursionError:
            raise ElaboratorError(
                f"elaborator {elab.name} recursed too deep", span) from None
        if not isinstance(result, Syntax):
            raise ElaboratorError(
                f"elaborator {elab.name} must produce syntax, got {result!r}",
                span)
        return result

    # -- match ---------------------------------------------------------------------

    def expand_match(self, stx, level):
        if len(stx.children) < 2:
            raise MalformedPattern("match: scrutinee expected", stx.span)
        scrutinee = self.expand_expr(stx.children[1], level)
        var = sym(gensym("match"), stx.span)
        clauses = []
        for clause in stx.children[2:]:
            if clause.kind != LIST or len(clause.children) < 2:
                raise MalformedPattern("match: clause is (pattern body ...)",
                                       clause.span)
            pat = clause.children[0]
            # expand the body once; or-alternatives share it
            body = [self.expand_expr(b, level) for b in clause.children[1:]]
            if pat.is_symbol("else"):
                clauses.append((None, body))
                continue
            if pat.kind == LIST and pat.children and pat.children[0].is_symbol("or"):
                for alt in pat.children[1:]:
                    clauses.append((alt, body))
                continue
            clauses.append((pat, body))
        chain = slist([sym("error"), Syntax("string", "match: no clause matched")],
                      stx.span)
        for pat, body in reversed(clauses):
            if pat is None:
                chain = slist([sym("begin")] + body, stx.span)
                continue
            pat = self.elaborate_pattern(pat, level)
            test, bindings = self.compile_pattern(pat, var)
            bound = slist(
                [sym("let"),
                 slist([slist([name, access]) for name, access in bindings])]
                + body, stx.span)
            chain = slist([sym("if"), test, bound, chain], stx.span)
        return slist([sym("let"), slist([slist([var, scrutinee])]), chain],
                     stx.span)

    def elaborate_pattern(self, pat, level):
        if pat.kind == EDITOR:
            residue = self.expand_editor(pat, level)
            return self.elaborate_pattern(residue, level)
        return pat

    def compile_pattern(self, pat, access):
        """Return (test syntax, [(binder symbol syntax, access syntax)])."""
        if pat.kind == SYMBOL:
            if pat.value == "_":
                return Syntax("boolean", True), []
            return Syntax("boolean", True), [(pat, access)]
        if pat.kind in ("number", "string", "boolean"):
            return slist([sym("equal?"), access, pat]), []
        if pat.kind == LIST and pat.children:
            head = pat.children[0]
            if head.is_symbol("quote"):
                return slist([sym("equal?"), access, pat]), []
            if head.is_symbol("list"):
                tests = [slist([sym("list?"), access]),
                         slist([sym("equal?"),
                                slist([sym("length"), access]),
                                Syntax("number", len(pat.children) - 1)])]
                bindings = []
                for i, sub in enumerate(pat.children[1:]):
                    sub_access = slist([sym("list-ref"), access,
                                        Syntax("number", i)])
                    t, b = self.compile_pattern(sub, sub_access)
                    tests.append(t)
                    bindings.extend(b)
                return slist([sym("and")] + tests), bindings
            if head.kind == SYMBOL:
                # constructor pattern
                tests = [slist([sym("%record?"), access, head,
                                Syntax("number", len(pat.children) - 1)])]
                bindings = []
                for i, sub in enumerate(pat.children[1:]):
                    sub_access = slist([sym("%record-ref"), access,
                                        Syntax("number", i)])
                    t, b = self.compile_pattern(sub, sub_access)
                    tests.append(t)
                    bindings.extend(b)
                return slist([sym("and")] + tests), bindings
        raise MalformedPattern(f"unsupported pattern: {write_form(pat)}", pat.span)


def make_state_view(elab, state, expander, span):
    """Compile-time view of an editor instance for its elaborator."""
    methods = {}
    visible = {s.name: s for s in elab.visible_specs}
    env = elab.env
    for name, spec in visible.items():
        def getter(ctx, name=name, spec=spec):
            if name in state:
                return state[name]
            if spec.default_syntax is not None:
                return eval_syntax(spec.default_syntax, env, ctx)
            return VOID
        methods[f"get-{name}"] = getter

    def get_state(ctx):
        return dict(state)

    methods["get-state"] = get_state
    return NativeObject(f"{elab.class_name}-view", methods)
