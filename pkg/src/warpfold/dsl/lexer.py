"""Tokenizer for .spk kernel sources."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = {
    "__global__", "void", "if", "else", "for", "return",
    "i32", "f32", "global", "shared",
    "__syncthreads", "__syncwarp",
    "shfl_down", "vote_all", "vote_any",
}

# Recognized so we can reject them with a precise diagnostic instead of a
# generic syntax error.
UNSUPPORTED_CALLS = {
    "grid_sync": "grid-level synchronization is unsupported (no grid-wide barrier on this runtime)",
    "this_grid": "grid-level cooperative groups are unsupported",
    "coalesced_threads": "dynamic (activated-thread) groups are unsupported",
    "shfl_up": "shfl_up is unsupported (only shfl_down is provided)",
    "shfl_xor": "shfl_xor is unsupported (only shfl_down is provided)",
    "ballot": "ballot is unsupported (only vote_all / vote_any are provided)",
}

PUNCT = [
    "<<", ">>",  # recognized so we can reject shifts cleanly
    "==", "!=", "<=", ">=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=",
    "++", "--",
    "(", ")", "{", "}", "[", "]", ";", ",", "=", "<", ">",
    "+", "-", "*", "/", "%", "!", "&",
]


@dataclass(frozen=True)
class Token:
    type: str  # ident | keyword | int | float | punct | eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def error(msg):
        raise ParseError(msg, line, col)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                error("unterminated block comment")
            skipped = source[i:end + 2]
            line += skipped.count("\n")
            col = len(skipped) - skipped.rfind("\n") if "\n" in skipped else col + len(skipped)
            i = end + 2
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            start = i
            is_float = False
            if source.startswith("0x", i) or source.startswith("0X", i):
                i += 2
                while i < n and source[i] in "0123456789abcdefABCDEF":
                    i += 1
                text = source[start:i]
                tokens.append(Token("int", text, line, col))
                col += i - start
                continue
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == ".":
                is_float = True
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                is_float = True
                i += 1
                if i < n and source[i] in "+-":
                    i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] == "f":
                is_float = True
                i += 1
            text = source[start:i]
            tokens.append(Token("float" if is_float else "int", text, line, col))
            col += i - start
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] in "_."):
                i += 1
            text = source[start:i]
            # "threadIdx.x" style names lex as one identifier; a trailing dot
            # (e.g. "foo.") is a syntax error caught by the parser.
            ttype = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(ttype, text, line, col))
            col += i - start
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            error(f"unexpected character {c!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens
