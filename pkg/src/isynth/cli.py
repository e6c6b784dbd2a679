"""Command line entry points: expand, run, test, script, serve.

Exit codes: 0 success, 1 user-code or diagnostic error, 2 usage error.
"""

import argparse
import os
import sys

from .errors import IsynthError
from .evaluator import Budget
from .kernel import Kernel
from .runtime import Session, run_event_script


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isynth",
        description="interactive-syntax language kernel")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, script=False):
        p.add_argument("file", help="module file")
        if script:
            p.add_argument("script", help="event script (JSON lines)")
        p.add_argument("--root", default=None,
                       help="project root (default: the file's directory)")
        p.add_argument("--strict-state", action="store_true",
                       help="unknown editor state keys are errors")
        p.add_argument("--budget-ms", type=int, default=100,
                       help="sandbox wall-clock budget per edit-time call")
        p.add_argument("--budget-steps", type=int, default=10_000_000,
                       help="sandbox evaluation step limit per call")

    common(sub.add_parser("expand", help="print the expanded module"))
    common(sub.add_parser("run", help="evaluate the run phase only"))
    common(sub.add_parser("test", help="instantiate the test submodule"))
    common(sub.add_parser("script",
                          help="run a headless edit session over an event "
                               "script and print the re-persisted module"),
           script=True)

    serve = sub.add_parser("serve", help="start the session protocol server")
    serve.add_argument("--root", default=".", help="project root")
    serve.add_argument("--strict-state", action="store_true")
    serve.add_argument("--budget-ms", type=int, default=100)
    serve.add_argument("--budget-steps", type=int, default=10_000_000)
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--stdio", action="store_true",
                       help="speak the protocol over stdin/stdout")
    serve.add_argument("--ws", action="store_true",
                       help="also serve a WebSocket bridge on port+1")
    return parser


def make_kernel(args, file=None):
    root = args.root
    if root is None:
        root = os.path.dirname(os.path.abspath(file)) if file else "."
    budget = Budget(wall_ms=getattr(args, "budget_ms", 100),
                    step_limit=getattr(args, "budget_steps", 10_000_000))
    return Kernel(root=root, strict_state=args.strict_state,
                  budget=budget, stdout=sys.stdout)


def fail(err):
    message = err.render() if isinstance(err, IsynthError) else str(err)
    print(message, file=sys.stderr)
    return 1


def cmd_expand(args):
    kernel = make_kernel(args, args.file)
    try:
        module = kernel.load_module(os.path.abspath(args.file))
    except IsynthError as e:
        return fail(e)
    sys.stdout.write(module.render_text())
    return 0


def cmd_run(args):
    kernel = make_kernel(args, args.file)
    try:
        module = kernel.load_module(os.path.abspath(args.file))
        kernel.instantiate_run(module)
    except IsynthError as e:
        return fail(e)
    return 0


def cmd_test(args):
    kernel = make_kernel(args, args.file)
    try:
        module = kernel.load_module(os.path.abspath(args.file))
    except IsynthError as e:
        return fail(e)
    if "test" not in module.submodules:
        print("0 tests")
        return 0
    try:
        kernel.instantiate_submodule(module, "test")
    except IsynthError as e:
        return fail(e)
    failures = kernel.check_failures
    if failures:
        for f in failures:
            print(f.render())
        total = kernel.checks_passed + len(failures)
        print(f"{len(failures)} of {total} tests failed")
        return 1
    print(f"{kernel.checks_passed} tests passed")
    return 0


def cmd_script(args):
    kernel = make_kernel(args, args.file)
    try:
        with open(args.script, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        print(str(e), file=sys.stderr)
        return 2
    try:
        session = Session(kernel, os.path.abspath(args.file)).open()
        text = run_event_script(session, lines)
    except IsynthError as e:
        return fail(e)
    sys.stdout.write(text)
    return 0


def cmd_serve(args):
    from .server import serve
    budget = Budget(wall_ms=args.budget_ms, step_limit=args.budget_steps)
    return serve(args.root, args.port, stdio=args.stdio, ws=args.ws,
                 strict_state=args.strict_state, budget=budget)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    handlers = {"expand": cmd_expand, "run": cmd_run, "test": cmd_test,
                "script": cmd_script, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except OSError as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
