"""The kernel ties reader, expander and evaluator together.

A Kernel owns a project root, a module cache, per-phase module instances,
the ambient prelude, the cross-phase effect log and the check counters.
CLI commands and protocol sessions each create one kernel.
"""

import importlib.resources
import io
import os
import sys

from . import builtins as builtins_mod
from .errors import EvaluationError, UnresolvedBinding
from .evaluator import Budget, Capabilities, Env, EvalContext, eval_syntax
from .expander import Elaborator, ModuleExpander
from .objects import root_definition
from .reader import read_module
from .values import write_str

sys.setrecursionlimit(20000)


def prelude_source():
    return (importlib.resources.files("isynth") / "prelude" / "prelude.rkt") \
        .read_text(encoding="utf-8")


class CheckFailure:
    __slots__ = ("actual", "expected")

    def __init__(self, actual, expected):
        self.actual = actual
        self.expected = expected

    def render(self):
        return (f"check-equal? failed: expected {write_str(self.expected)}, "
                f"got {write_str(self.actual)}")


class Kernel:
    def __init__(self, root=".", strict_state=False, budget=None, stdout=None):
        self.root = os.path.realpath(root)
        self.strict_state = strict_state
        self.budget = budget or Budget()
        self.stdout = stdout if stdout is not None else io.StringIO()
        self.effect_log = []       # [(phase name, value)]
        self.checks_passed = 0
        self.check_failures = []   # [CheckFailure]
        self.test_windows = []
        self.modules = {}          # abs path -> ExpandedModule
        self.instances = {}        # (abs path, phase key) -> Env
        self._loading = []
        self.base_env = builtins_mod.base_environment()
        self.prelude_module = None
        self.base_elaborator = Elaborator("base$", None, "this", None,
                                          Env(self.base_env), [], "<kernel>")
        self._edit_base = None
        self._bootstrap_prelude()

    # -- io / logs -----------------------------------------------------------

    def write_output(self, text):
        self.stdout.write(text)

    def log_effect(self, phase, value):
        self.effect_log.append((phase, value))

    def effects_for(self, phase):
        return [v for p, v in self.effect_log if p == phase]

    def record_check(self, ok, actual, expected):
        if ok:
            self.checks_passed += 1
        else:
            self.check_failures.append(CheckFailure(actual, expected))

    # -- prelude ----------------------------------------------------------------

    def _bootstrap_prelude(self):
        text = prelude_source()
        tree = read_module(text, "<prelude>")
        expander = ModuleExpander(self, "<prelude>", "<prelude>")
        self.prelude_module = expander.expand_module(tree)
        self._edit_base = self._instantiate_edit(self.prelude_module,
                                                 "<prelude>")

    def prelude_elaborator(self, name):
        if name == "base$":
            return self.base_elaborator
        if self.prelude_module is None:
            return None
        return self.prelude_module.elaborators.get(name)

    def compile_base_env(self):
        """Compile-phase scope: prelude compile helpers over the builtins."""
        if self.prelude_module is not None:
            env = self.prelude_module.compile_envs.get(1)
            if env is not None:
                return env
        return self.base_env

    def edit_base_env(self):
        """Scope every module's edit submodule opens in: prelude editors."""
        return self._edit_base

    # -- module loading -----------------------------------------------------------

    def resolve_path(self, path, relative_to=None):
        if os.path.isabs(path):
            return os.path.realpath(path)
        if relative_to and relative_to not in ("<prelude>",):
            base = os.path.dirname(relative_to)
            candidate = os.path.realpath(os.path.join(base, path))
            if os.path.exists(candidate):
                return candidate
        return os.path.realpath(os.path.join(self.root, path))

    def module_id(self, abspath):
        try:
            return os.path.relpath(abspath, self.root)
        except ValueError:
            return abspath

    def load_module(self, path, relative_to=None, tolerant=False):
        abspath = self.resolve_path(path, relative_to)
        cached = self.modules.get(abspath)
        if cached is not None:
            return cached
        if abspath in self._loading:
            raise EvaluationError(
                f"module cycle: {' -> '.join(self.module_id(p) for p in self._loading)}"
                f" -> {self.module_id(abspath)}")
        with open(abspath, encoding="utf-8") as fh:
            text = fh.read()
        return self.expand_text(text, abspath, tolerant=tolerant)

    def expand_text(self, text, abspath, tolerant=False):
        tree = read_module(text, self.module_id(abspath))
        self._loading.append(abspath)
        try:
            expander = ModuleExpander(self, abspath, self.module_id(abspath),
                                      tolerant=tolerant)
            module = expander.expand_module(tree)
        finally:
            self._loading.pop()
        self.modules[abspath] = module
        return module

    def forget_module(self, abspath):
        abspath = os.path.realpath(abspath)
        self.modules.pop(abspath, None)
        for key in [k for k in self.instances if k[0] == abspath]:
            del self.instances[key]

    # -- instantiation ---------------------------------------------------------------

    def run_context(self, phase="run", budget=None, session=None):
        caps = Capabilities(fs_read_root=self.root)
        return EvalContext(self, phase=phase, budget=budget, caps=caps,
                           session=session)

    def instantiate_run(self, module, fresh=False):
        key = (module.path, "run")
        if not fresh and key in self.instances:
            return self.instances[key]
        ns = Env(self.base_env)
        self.instances[key] = ns
        ctx = self.run_context("run")
        for path, span in module.requires:
            dep = self.load_module(path, relative_to=module.path)
            dep_ns = self.instantiate_run(dep)
            self._import_provides(ns, dep, dep_ns, span)
        for form in module.run_forms:
            eval_syntax(form, ns, ctx)
        return ns

    def _import_provides(self, ns, dep, dep_ns, span):
        for name in dep.run_provides:
            try:
                ns.define(name, dep_ns.lookup(name))
            except KeyError:
                raise EvaluationError(
                    f"module {dep.module_id} provides {name} but does not "
                    f"define it", span) from None

    def _instantiate_edit(self, module, key_path, session=None):
        key = (key_path, "edit")
        if session is None and key in self.instances:
            return self.instances[key]
        parent = self.base_env if module.module_id == "<prelude>" \
            else self.edit_base_env()
        ns = Env(parent)
        ns.define("base$", root_definition(Env(self.base_env)))
        if session is None:
            self.instances[key] = ns
        ctx = self.run_context("edit", session=session)
        for path, span in module.edit_requires:
            dep = self.load_module(path, relative_to=module.path)
            dep_ns = self._instantiate_module_at_edit(dep)
            self._import_provides(ns, dep, dep_ns, span)
        for form in module.edit_forms:
            eval_syntax(form, ns, ctx)
        if module.module_id == "<prelude>":
            return ns
        return ns

    def _instantiate_module_at_edit(self, module):
        """Evaluate an ordinary module's run-phase body at the edit phase."""
        key = (module.path, "edit-instance")
        if key in self.instances:
            return self.instances[key]
        ns = Env(self.base_env)
        self.instances[key] = ns
        ctx = self.run_context("edit")
        for path, span in module.requires:
            dep = self.load_module(path, relative_to=module.path)
            dep_ns = self._instantiate_module_at_edit(dep)
            self._import_provides(ns, dep, dep_ns, span)
        for form in module.run_forms:
            eval_syntax(form, ns, ctx)
        return ns

    def instantiate_submodule(self, module, name, session=None):
        """Evaluate exactly one submodule; 'edit' is phase-isolated, named
        submodules see the enclosing module's run phase."""
        if name == "edit":
            if not (module.edit_forms or module.edit_provides
                    or module.edit_requires):
                raise EvaluationError(
                    f"module {module.module_id} has no edit submodule")
            return self._instantiate_edit(module, module.path, session=session)
        forms = module.submodules.get(name)
        if forms is None:
            raise EvaluationError(
                f"module {module.module_id} has no submodule named {name}")
        run_ns = self.instantiate_run(module)
        ns = Env(run_ns)
        ctx = self.run_context("run")
        for form in forms:
            eval_syntax(form, ns, ctx)
        return ns

    def edit_namespace(self, module, session=None):
        return self._instantiate_edit(module, module.path, session=session)

    # -- definition lookup ------------------------------------------------------------

    def find_definition(self, binding, host_module, session=None,
                        edit_ns=None):
        """Resolve an editor binding to a live EditorDefinition."""
        from .objects import EditorDefinition
        if binding.module_path is None:
            ns = edit_ns
            if ns is None:
                ns = self.edit_namespace(host_module, session=session)
            try:
                d = ns.lookup(binding.name)
            except KeyError:
                raise UnresolvedBinding(
                    f"no editor definition named {binding.name} in "
                    f"{host_module.module_id}") from None
        else:
            try:
                dep = self.load_module(binding.module_path,
                                       relative_to=host_module.path)
            except OSError as e:
                raise UnresolvedBinding(
                    f"cannot load module {binding.module_path!r}: {e}") from None
            if binding.name not in dep.edit_provides:
                raise UnresolvedBinding(
                    f"module {binding.module_path!r} does not provide "
                    f"{binding.name}")
            ns = self.edit_namespace(dep)
            try:
                d = ns.lookup(binding.name)
            except KeyError:
                raise UnresolvedBinding(
                    f"module {binding.module_path!r} does not define "
                    f"{binding.name}") from None
        if not isinstance(d, EditorDefinition):
            raise UnresolvedBinding(
                f"{binding.name} is not an editor definition")
        return d


def resolve_binding(kernel, binding, host_module):
    """Resolve a binding to a definition locator without instantiating it."""
    from .editor_form import DefinitionLocator
    if binding.module_path is None:
        meta = host_module.editor_defs.get(binding.name)
        if meta is None and kernel.prelude_module is not None:
            meta = kernel.prelude_module.editor_defs.get(binding.name)
        if meta is None and binding.name != "base$":
            raise UnresolvedBinding(
                f"no editor definition named {binding.name} in "
                f"{host_module.module_id}")
        return DefinitionLocator(host_module.module_id, binding.name,
                                 local=True)
    try:
        dep = kernel.load_module(binding.module_path,
                                 relative_to=host_module.path)
    except OSError as e:
        raise UnresolvedBinding(
            f"cannot load module {binding.module_path!r}: {e}") from None
    if binding.name not in dep.edit_provides:
        raise UnresolvedBinding(
            f"module {binding.module_path!r} does not provide {binding.name}")
    return DefinitionLocator(dep.module_id, binding.name)
