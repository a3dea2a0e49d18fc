"""Smoke test for the compiled extension.

Build and copy the module next to this file first:

    cargo build --release -p safelam-py --features extension-module
    cp target/release/libsafelam.so python/safelam.so
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import safelam  # noqa: E402


def main():
    two = safelam.Term.parse(r"\f.\x.f (f x)")
    four = safelam.Term.parse(r"(\f.\x.f (f x)) (\f.\x.f (f x))").normalize()
    assert four == safelam.Term.parse(r"\f.\x.f (f (f (f x)))"), four
    assert four == safelam.nat(4)
    assert str(safelam.Term.parse(r"\f.\x.f x").normalize(eta=True)) == r"\f.f"
    assert two.convertible(safelam.nat(2))

    ty, ctx = safelam.Term.parse("g (g c)").infer()
    assert str(ty) == "o" and dict((x, str(a)) for x, a in ctx) == {"c": "o", "g": "o -> o"}

    a = safelam.Type.parse("((o->o)->o)->o")
    assert (a.order, a.degree, a.homogeneous) == (3, 3, True)
    assert a.subst_base(safelam.Type.parse("o->o")).order == 4

    try:
        safelam.Term.parse(r"\x.x x").normalize()
    except safelam.TypeError:
        pass
    else:
        raise AssertionError("self-application must not type")
    try:
        safelam.Term.parse(r"\x.")
    except safelam.ParseError:
        pass
    else:
        raise AssertionError("parse error expected")
    try:
        safelam.Term.parse(r"(\f.\x.f (f x)) (\f.\x.f (f x))").normalize(steps=1)
    except safelam.BudgetError:
        pass
    else:
        raise AssertionError("budget error expected")

    unsafe = safelam.Term.parse(r"\f.f (\x.f (\y.x))").check_safety(a)
    assert unsafe["verdict"] == "unsafe" and unsafe["var"] == "x", unsafe
    assert safelam.Term.parse(r"\f.f (\x.f (\y.y))").check_safety(a)["verdict"] == "safe"

    w, _ = safelam.encode_word("ab", "abba")
    assert safelam.decode_word(w, "ab") == "abba"
    assert safelam.decode_bool(safelam.bool_term(True)) is True
    assert [safelam.tower(n) for n in range(5)] == [1, 2, 4, 16, 65536]

    left = safelam.StarFree("a.~0|b.~0", "abc")
    right = safelam.StarFree("~(e|c.~0)", "abc")
    assert left.first_difference(right, max_len=5) is None
    assert left.member("ab") and not left.member("")
    assert str(safelam.StarFree("0", "a").compile()) == r"\s.\x.\y.y"
    cert = safelam.StarFree("a.b|~a", "ab").certificate()
    assert cert["hls"]["verdict"] == "safe"
    assert cert["term_size"] <= cert["size_constant"] * cert["expression_size"]

    aaa = safelam.StarFree("a.a.a", "ab")
    assert aaa.reduce(1) is False and aaa.reduce(2) is True
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
