#!/usr/bin/env python3
"""Builds the labeled corpus fixture: 50 Python files plus labels.json.

Every label follows from how the file is constructed (line counts, line
lengths, character mix, keyword position). The arithmetic below is checked
with plain Python so the labels never depend on the implementation under test.

usage: make_corpus.py OUTDIR
"""
import json
import os
import sys


def code(i, width=None):
    line = f"value_{i} = {i}"
    if width is not None:
        pad = width - len(f'value_{i} = ""')
        assert pad >= 0
        line = f'value_{i} = "{"x" * pad}"'
    return line


def comment(i, width=None, indent=""):
    line = f"{indent}# note {i} on the value"
    if width is not None:
        pad = width - len(f"{indent}# ")
        line = f"{indent}# {'y' * pad}"
    return line


def interleave(n_comments, n_code, width=None):
    lines = []
    c = 0
    for i in range(n_code):
        while c < n_comments and c * n_code <= i * n_comments:
            lines.append(comment(c, width))
            c += 1
        lines.append(code(i, width))
    while c < n_comments:
        lines.append(comment(c, width))
        c += 1
    return lines


def text(lines):
    return "\n".join(lines) + "\n"


def ascii_alnum_fraction(s):
    alnum = sum(1 for ch in s if ch.isascii() and ch.isalnum())
    return alnum / len(s)


def check_counts(body, n_comment, n_code):
    got_c = got_k = 0
    for line in body.split("\n"):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            got_c += 1
        else:
            got_k += 1
    assert (got_c, got_k) == (n_comment, n_code), (got_c, got_k, n_comment, n_code)


files = {}


def add(name, body, reasons):
    assert name not in files
    files[name] = (body, sorted(reasons))


# Comment ratio window, inclusive at both ends.
for n_c, n_k, reasons in [
    (30, 100, []),
    (29, 100, ["ratio-low"]),
    (95, 100, []),
    (96, 100, ["ratio-high"]),
    (0, 20, ["ratio-low"]),
    (3, 10, []),
    (19, 20, []),
    (20, 20, ["ratio-high"]),
    (50, 100, []),
    (1, 4, ["ratio-low"]),
]:
    body = text(interleave(n_c, n_k))
    check_counts(body, n_c, n_k)
    add(f"ratio_{n_c:03d}_{n_k:03d}.py", body, reasons)

# Average line length: every line has exactly the given width.
for width, reasons in [(100, []), (101, ["avg-line-len"]), (150, ["avg-line-len"]), (60, [])]:
    lines = interleave(10, 20, width)
    assert all(len(l) == width for l in lines)
    add(f"avg_len_{width}.py", text(lines), reasons)

# Maximum line length: one long line among short ones.
for width, reasons in [(1000, []), (1001, ["max-line-len"]), (1200, ["max-line-len"])]:
    lines = interleave(10, 30)
    lines[5] = code(999, width)
    assert len(lines[5]) == width
    assert sum(map(len, lines)) / len(lines) <= 100
    add(f"max_len_{width}.py", text(lines), reasons)

# Code points, not bytes: 100 two-byte characters per line stays within the average.
lines = interleave(10, 20)
for i in range(0, len(lines), 2):
    lines[i] = lines[i][:1] + " " + "é" * 49 + "x" * 49 if lines[i].startswith("#") else lines[i]
wide = [l for l in lines if "é" in l]
assert wide and all(len(l) == 100 and len(l.encode()) > 100 for l in wide)
body = text(lines)
assert ascii_alnum_fraction(body) >= 0.25
add("unicode_width.py", body, [])

# Alphanumeric fraction with whitespace and newlines in the denominator.
def symbol_heavy(n_sym, n_code=20, n_comment=10):
    lines = interleave(n_comment, n_code)
    for i, l in enumerate(lines):
        if not l.startswith("#"):
            lines[i] = l + " or (" + "{}," * n_sym + ")"
    return text(lines)

low = symbol_heavy(14)
high = symbol_heavy(10)
assert ascii_alnum_fraction(low) < 0.25, ascii_alnum_fraction(low)
assert ascii_alnum_fraction(high) >= 0.25, ascii_alnum_fraction(high)
add("alnum_low.py", low, ["alnum-frac"])
add("alnum_ok.py", high, [])
spaced = interleave(10, 20)
spaced = [l.replace(" = ", " =" + " " * 40) if not l.startswith("#") else l for l in spaced]
body = text(spaced)
assert ascii_alnum_fraction(body) < 0.25
add("alnum_whitespace.py", body, ["alnum-frac"])

# Autogenerated markers in the first five lines, case-insensitive.
base = interleave(10, 20)
for name, marker, line_no, reasons in [
    ("autogen_line1.py", "# Auto-generated file", 1, ["autogen-keyword"]),
    ("autogen_line5.py", "# DO NOT EDIT", 5, ["autogen-keyword"]),
    ("autogen_line6.py", "# do not edit", 6, []),
    ("autogen_autogenerated.py", "# This module is AUTOGENERATED", 2, ["autogen-keyword"]),
    ("autogen_generated_by.py", "# Generated by the schema compiler", 3, ["autogen-keyword"]),
    ("autogen_in_code.py", 'banner = "do not edit"', 4, ["autogen-keyword"]),
    ("autogen_near_miss.py", "# generated with care", 1, []),
]:
    lines = list(base)
    lines.insert(line_no - 1, marker)
    assert lines[line_no - 1] == marker
    add(name, text(lines), reasons)

# Docstring lines count as comment lines.
doc = ['def area(r):', '    """Area of a circle.', '', '    Radius in metres.', '    """']
doc += [f"    v{i} = r * {i}" for i in range(8)]
doc += ["    return v0"]
# comment lines: 4 non-blank docstring lines; code lines: def + 8 + return = 10.
add("docstring_counts.py", text(doc), [])
doc_only = ["def f():", "    pass"]
add("docstring_absent.py", text(doc_only), ["ratio-low"])
mod_doc = ['"""Module summary.', "", "Details about the module.", '"""'] + [code(i) for i in range(10)]
# 3 non-blank docstring lines vs 10 code lines.
add("docstring_module.py", text(mod_doc), [])
cls_doc = ["class Box:", '    """A box."""', "", "    def __init__(self):", '        """Make it."""',
           "        self.size = 1", "        self.kind = 2", "        self.tag = 3", "        self.n = 4"]
# comment lines 2, code lines 6 -> 0.333
add("docstring_class.py", text(cls_doc), [])
not_doc = ["def f():", "    x = 1", '    """not a docstring"""', "    return x"]
add("docstring_not_first.py", text(not_doc), ["ratio-low"])
heavy_doc = ["def f():", '    """Summary line.', *["    more text"] * 5, '    """', "    return 1"]
# docstring spans 7 lines, code lines 2 -> ratio 3.5
add("docstring_heavy.py", text(heavy_doc), ["ratio-high"])

# Comment-like text inside code and trailing comments are code lines.
hashes = [f's{i} = "# not a comment"  # trailing' for i in range(10)] + [comment(i) for i in range(2)]
add("hash_in_string.py", text(hashes), ["ratio-low"])
indented = ["def f():"] + [comment(i, indent="    ") for i in range(3)] + [f"    x{i} = {i}" for i in range(8)] + ["    return x0"]
# comments 3, code 10 -> 0.3
add("indented_comments.py", text(indented), [])

# No code at all.
add("empty.py", "", ["empty-code"])
add("only_comments.py", text([comment(i) for i in range(5)]), ["empty-code"])
# Whitespace-only text has no alphanumerics; an empty file has no characters to measure.
add("only_blank.py", "\n\n   \n\t\n", ["alnum-frac", "empty-code"])

# Blank lines do not count on either side.
lines = interleave(6, 20)
spaced = []
for l in lines:
    spaced += [l, ""]
add("blank_lines.py", text(spaced), [])

# Several rules at once.
lines = interleave(0, 20, 120)
add("multi_avg_ratio.py", text(lines), ["avg-line-len", "ratio-low"])
lines = ["# Auto-generated"] + interleave(0, 20)
lines[3] = code(3, 1500)
add("multi_autogen_max_ratio.py", text(lines), ["autogen-keyword", "max-line-len", "ratio-low"])

# Ordinary well-commented modules.
ordinary = '''# Utilities for small statistics.
import math


def mean(xs):
    """Arithmetic mean."""
    # an empty input has no mean
    if not xs:
        return None
    # sum first, then divide
    return sum(xs) / len(xs)


def stdev(xs):
    # population standard deviation
    m = mean(xs)
    if m is None:
        return None
    # squared deviations from the mean
    sq = [(x - m) ** 2 for x in xs]
    return math.sqrt(sum(sq) / len(xs))
'''
check_counts(ordinary, 5, 12)
# 5 '#' lines plus 1 docstring line = 6 comment lines; 12 - 1 = 11 code lines.
add("ordinary_stats.py", ordinary, [])
ordinary2 = '''class Stack:
    # backing list
    def __init__(self):
        self.items = []

    # add to the top
    def push(self, x):
        self.items.append(x)

    # remove from the top
    def pop(self):
        return self.items.pop()
'''
# 3 comment lines, 7 code lines
add("ordinary_stack.py", ordinary2, [])
ordinary3 = "\n".join(["def loop(n):", "    # count up", "    total = 0", "    for i in range(n):",
                       "        # accumulate", "        total += i", "    return total"]) + "\n"
# 2 comments, 5 code -> 0.4
add("ordinary_loop.py", ordinary3, [])
crlf = "# header\r\nx = 1\r\ny = 2\r\n# tail\r\nz = 3\r\n"
# 2 comments, 3 code
add("crlf_endings.py", crlf, [])
no_newline = "# one\nx = 1\ny = 2"
# 1 comment, 2 code -> 0.5
add("no_trailing_newline.py", no_newline, [])
unparsable = "# broken file\ndef f(:\n    return 1\n"
# 1 comment, 2 code -> 0.5; parse failure only disables docstring detection
add("unparsable.py", unparsable, [])

shebang = ["#!/usr/bin/env python3", "# -*- coding: utf-8 -*-"] + [code(i) for i in range(6)]
# 2 comment lines, 6 code lines
add("shebang.py", text(shebang), [])
edge_doc = ['"""Summary.'] + [f"detail {i}" for i in range(17)] + ['"""'] + [code(i) for i in range(20)]
# 19 docstring lines vs 20 code lines -> 0.95 exactly
add("docstring_boundary_095.py", text(edge_doc), [])

assert len(files) == 50, len(files)

out = sys.argv[1]
os.makedirs(out, exist_ok=True)
labels = {}
for name, (body, reasons) in sorted(files.items()):
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as f:
        f.write(body)
    labels[name] = reasons
with open(os.path.join(out, "labels.json"), "w") as f:
    json.dump(labels, f, indent=1, sort_keys=True)
    f.write("\n")
