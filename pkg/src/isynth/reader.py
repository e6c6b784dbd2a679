"""Reader: turns module text into syntax trees.

The surface language is a small s-expression language.  On top of the usual
atoms and lists the reader understands one extra production, the ``#editor``
block, which parses into an editor-literal node carrying an EditorValue.
Reading never runs user code.
"""

from .editor_form import EditorBinding, EditorValue
from .errors import LexError, ParseError
from .syntax import (BOOLEAN, EDITOR, LIST, NUMBER, STRING, SYMBOL,
                     SourceSpan, Syntax)
from .values import VOID

_DELIMS = set(" \t\r\n()[]{};\"'`,")
_CLOSERS = {"(": ")", "[": "]"}
_SUGAR = {
    "'": "quote",
    "`": "quasiquote",
    ",": "unquote",
    ",@": "unquote-splicing",
    "#'": "syntax",
    "#`": "quasisyntax",
    "#,": "unsyntax",
    "#,@": "unsyntax-splicing",
}

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


class Reader:
    def __init__(self, text, filename="<string>"):
        self.text = text
        self.file = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    # -- low-level cursor -------------------------------------------------

    def peek(self, ahead=0):
        i = self.pos + ahead
        return self.text[i] if i < len(self.text) else ""

    def advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def here(self):
        return self.pos, self.line, self.col

    def span_from(self, mark):
        start, line, col = mark
        return SourceSpan(self.file, start, self.pos, line, col)

    def error(self, cls, message, mark=None):
        if mark is None:
            mark = self.here()
        raise cls(message, self.span_from(mark))

    def skip_ws(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == ";":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.advance()
            elif c in " \t\r\n":
                self.advance()
            else:
                return

    def at_eof(self):
        self.skip_ws()
        return self.pos >= len(self.text)

    # -- forms -------------------------------------------------------------

    def read_form(self):
        self.skip_ws()
        mark = self.here()
        c = self.peek()
        if c == "":
            self.error(ParseError, "unexpected end of input", mark)
        if c in "([":
            return self.read_list(c)
        if c in ")]":
            self.error(ParseError, f"unexpected '{c}'", mark)
        if c == "}" or c == "{":
            self.error(ParseError, f"unexpected '{c}'", mark)
        if c == '"':
            return self.read_string()
        if c == "'" or c == "`":
            self.advance()
            return self.wrap_sugar(_SUGAR[c], mark)
        if c == ",":
            self.advance()
            if self.peek() == "@":
                self.advance()
                return self.wrap_sugar(_SUGAR[",@"], mark)
            return self.wrap_sugar(_SUGAR[","], mark)
        if c == "#":
            return self.read_hash(mark)
        return self.read_atom(mark)

    def wrap_sugar(self, name, mark):
        inner = self.read_form()
        span = self.span_from(mark)
        return Syntax(LIST, None,
                      (Syntax(SYMBOL, name, (), span), inner), span)

    def read_list(self, opener):
        mark = self.here()
        closer = _CLOSERS[opener]
        self.advance()
        children = []
        while True:
            self.skip_ws()
            c = self.peek()
            if c == "":
                # report where the input ran out, not where the list began
                self.error(ParseError, "unbalanced parentheses: list not closed")
            if c in ")]":
                if c != closer:
                    self.error(ParseError,
                               f"mismatched delimiter: expected '{closer}', got '{c}'")
                self.advance()
                return Syntax(LIST, None, tuple(children), self.span_from(mark))
            children.append(self.read_form())

    def read_string(self):
        mark = self.here()
        self.advance()
        out = []
        while True:
            c = self.peek()
            if c == "":
                self.error(LexError, "unterminated string", mark)
            if c == '"':
                self.advance()
                return Syntax(STRING, "".join(out), (), self.span_from(mark))
            if c == "\\":
                self.advance()
                e = self.peek()
                if e == "n":
                    out.append("\n")
                elif e == "t":
                    out.append("\t")
                elif e == "r":
                    out.append("\r")
                elif e == '"':
                    out.append('"')
                elif e == "\\":
                    out.append("\\")
                elif e == "u":
                    self.advance()
                    hexd = self.text[self.pos:self.pos + 4]
                    if len(hexd) < 4 or any(h not in "0123456789abcdefABCDEF" for h in hexd):
                        self.error(LexError, "bad \\u escape")
                    out.append(chr(int(hexd, 16)))
                    self.advance(3)  # last hex digit consumed below
                else:
                    self.error(LexError, f"unknown escape '\\{e}'")
                self.advance()
            else:
                out.append(c)
                self.advance()

    def read_hash(self, mark):
        nxt = self.peek(1)
        if nxt == "t" or nxt == "f":
            self.advance(2)
            if self.peek() and self.peek() not in _DELIMS:
                self.error(LexError, "bad token after #t/#f", mark)
            return Syntax(BOOLEAN, nxt == "t", (), self.span_from(mark))
        if nxt == "'":
            self.advance(2)
            return self.wrap_sugar(_SUGAR["#'"], mark)
        if nxt == "`":
            self.advance(2)
            return self.wrap_sugar(_SUGAR["#`"], mark)
        if nxt == ",":
            self.advance(2)
            if self.peek() == "@":
                self.advance()
                return self.wrap_sugar(_SUGAR["#,@"], mark)
            return self.wrap_sugar(_SUGAR["#,"], mark)
        if nxt == ":":
            # keyword token: a symbol spelled with its #: prefix
            self.advance(2)
            name = self.read_bare_token()
            return Syntax(SYMBOL, "#:" + name, (), self.span_from(mark))
        if self.text.startswith("#editor", self.pos):
            after = self.peek(len("#editor"))
            if after == "" or after in _DELIMS or after == "{":
                self.advance(len("#editor"))
                return self.read_editor_block(mark)
        self.error(LexError, "bad token starting with '#'", mark)

    def read_bare_token(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS \
                and self.text[self.pos] != "#":
            self.advance()
        return self.text[start:self.pos]

    def read_atom(self, mark):
        tok = self.read_bare_token()
        if not tok:
            self.error(LexError, f"bad character '{self.peek()}'", mark)
        span = self.span_from(mark)
        num = parse_number(tok)
        if num is not None:
            if isinstance(num, int) and not (INT64_MIN <= num <= INT64_MAX):
                self.error(LexError, "integer literal out of 64-bit range", mark)
            return Syntax(NUMBER, num, (), span)
        return Syntax(SYMBOL, tok, (), span)

    # -- editor blocks ------------------------------------------------------

    def read_editor_block(self, mark):
        self.expect_punct("{")
        self.expect_word("binding")
        self.expect_punct(":")
        self.expect_punct("[")
        module_path = self.read_block_string_or_null()
        self.expect_punct(",")
        name = self.read_block_string()
        self.expect_punct("]")
        self.expect_punct(",")
        self.expect_word("state")
        self.expect_punct(":")
        state = self.read_block_object()
        self.expect_punct("}")
        value = EditorValue(EditorBinding(module_path, name), state)
        return Syntax(EDITOR, value, (), self.span_from(mark))

    def expect_punct(self, p):
        self.skip_ws()
        if self.peek() != p:
            self.error(ParseError, f"malformed editor block: expected '{p}'")
        self.advance()

    def expect_word(self, word):
        self.skip_ws()
        got = self.read_block_key()
        if got != word:
            self.error(ParseError,
                       f"malformed editor block: expected '{word}', got '{got}'")

    def read_block_key(self):
        self.skip_ws()
        if self.peek() == '"':
            return self.read_string().value
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] in "_-?!$"):
            self.advance()
        if self.pos == start:
            self.error(ParseError, "malformed editor block: expected a key")
        return self.text[start:self.pos]

    def read_block_string(self):
        self.skip_ws()
        if self.peek() != '"':
            self.error(ParseError, "malformed editor block: expected a string")
        return self.read_string().value

    def read_block_string_or_null(self):
        self.skip_ws()
        if self.peek() == "n":
            self.expect_word("null")
            return None
        return self.read_block_string()

    def read_block_object(self):
        self.expect_punct("{")
        out = {}
        self.skip_ws()
        if self.peek() == "}":
            self.advance()
            return out
        while True:
            key = self.read_block_key()
            self.expect_punct(":")
            if key in out:
                self.error(ParseError, f"duplicate state key '{key}'")
            out[key] = self.read_block_value()
            self.skip_ws()
            if self.peek() == ",":
                self.advance()
                continue
            self.expect_punct("}")
            return out

    def read_block_array(self):
        self.expect_punct("[")
        out = []
        self.skip_ws()
        if self.peek() == "]":
            self.advance()
            return out
        while True:
            out.append(self.read_block_value())
            self.skip_ws()
            if self.peek() == ",":
                self.advance()
                continue
            self.expect_punct("]")
            return out

    def read_block_value(self):
        self.skip_ws()
        mark = self.here()
        c = self.peek()
        if c == '"':
            return self.read_string().value
        if c == "{":
            return self.read_block_object()
        if c == "[":
            return self.read_block_array()
        if c == "#":
            if self.text.startswith("#editor", self.pos):
                self.advance(len("#editor"))
                return self.read_editor_block(mark).value
            self.error(ParseError, "malformed editor block value", mark)
        word_start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] in "+-._"):
            self.advance()
        tok = self.text[word_start:self.pos]
        if tok == "true":
            return True
        if tok == "false":
            return False
        if tok == "null":
            return VOID
        num = parse_number(tok)
        if num is None:
            self.error(ParseError, f"malformed editor block value '{tok}'", mark)
        if isinstance(num, int) and not (INT64_MIN <= num <= INT64_MAX):
            self.error(LexError, "integer literal out of 64-bit range", mark)
        return num


def parse_number(tok):
    """Return int or float for a numeric token, else None."""
    if not tok:
        return None
    body = tok[1:] if tok[0] in "+-" else tok
    if not body or not (body[0].isdigit() or (body[0] == "." and len(body) > 1
                                              and body[1].isdigit())):
        return None
    try:
        if any(ch in body for ch in ".eE"):
            return float(tok)
        return int(tok)
    except ValueError:
        return None


def read_module(text, filename="<string>"):
    """Parse a whole module; the result's children are its top-level forms."""
    r = Reader(text, filename)
    forms = []
    while not r.at_eof():
        forms.append(r.read_form())
    span = SourceSpan(filename, 0, len(text), 1, 1)
    return Syntax(LIST, "module", tuple(forms), span)


def read_form(text, filename="<string>"):
    r = Reader(text, filename)
    form = r.read_form()
    if not r.at_eof():
        r.error(ParseError, "trailing input after form")
    return form
