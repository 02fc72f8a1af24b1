import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weyl_census import freegroup as fg
from weyl_census.errors import EmptyCore, NotVeryReduced, ParseError

a, A, b, B = 0, 1, 2, 3


def W(text: str, l: int = 2) -> tuple:
    return fg.parse_word(text, l)


letters2 = st.integers(0, 3)
raw_words = st.lists(letters2, max_size=14).map(tuple)
reduced_words = raw_words.map(fg.reduce)
nonempty_cores = reduced_words.map(lambda w: fg.cyclic_reduce(w)[0]).filter(bool)


def test_letter_helpers():
    assert fg.letter(1) == b and fg.letter(1, inverted=True) == B
    assert fg.letter_index(B) == 1 and fg.is_inverted(B) and not fg.is_inverted(b)
    with pytest.raises(ValueError):
        fg.letter(-1)


def test_reduce_examples():
    assert fg.reduce((a, A)) == ()
    assert fg.reduce((a, b, B, a)) == (a, a)
    assert fg.reduce((a, b)) == (a, b)


def test_cyclic_reduce_examples():
    assert fg.cyclic_reduce((a, b, A)) == ((b,), (a,))
    assert fg.cyclic_reduce((a, b)) == ((a, b), ())
    core, conj = fg.cyclic_reduce((A, b, a, a))
    assert core == (b, a) and conj == (A,)
    assert fg.reduce(conj + core + fg.invert(conj)) == (A, b, a, a)


def test_rotations_examples():
    assert fg.rotations((a, b)) == {(a, b), (b, a)}
    assert fg.rotations((a, a)) == {(a, a)}
    assert fg.rotations((a, b, a, b)) == {(a, b, a, b), (b, a, b, a)}
    with pytest.raises(NotVeryReduced):
        fg.rotations((a, b, A))
    with pytest.raises(NotVeryReduced):
        fg.rotations(())


def test_primitive_examples():
    assert not fg.is_primitive((a, b, a, b))
    assert fg.is_primitive((a, b))
    assert fg.is_primitive((a, a, b, a, b))
    with pytest.raises(NotVeryReduced):
        fg.is_primitive((a, A))


def test_canonical_class_examples():
    assert fg.canonical_class((b, a)) == fg.canonical_class((a, b))
    assert fg.canonical_class((a, b, A)) == fg.canonical_class((b,))
    assert fg.canonical_class((a, b)) == fg.canonical_class((B, A))
    c = fg.canonical_class((b, a, b, a))
    assert c.canonical == (a, b, a, b) and c.primitive_root == (a, b) and c.power == 2
    with pytest.raises(EmptyCore):
        fg.canonical_class((a, A))


def test_enumerate_examples():
    assert len(list(fg.enumerate_words(2, 3))) == 53
    assert list(fg.enumerate_words(1, 2)) == [(), (a,), (A,), (a, a), (A, A)]
    assert len(list(fg.enumerate_words(2, 1))) == 5


@pytest.mark.parametrize("l", [1, 2, 3])
def test_enumeration_against_brute_force(l):
    # brute force: all letter strings, keep the reduced ones
    for n in range(0, 6):
        expected = [w for w in itertools.product(range(2 * l), repeat=n) if fg.is_reduced(w)]
        got = [w for w in fg.enumerate_words(l, n) if len(w) == n]
        assert got == sorted(expected)


def test_format_and_parse():
    assert fg.format_word((a, b, A), 2) == "a b A"
    assert W("a b A") == (a, b, A) == W("abA")
    assert fg.format_word((0, 3, 0), 30) == "g0 g1' g0"
    assert fg.parse_word("g0 g1' g0", 30) == (0, 3, 0)
    assert W("a A b") == (b,)
    with pytest.raises(ParseError):
        W("c")
    with pytest.raises(ParseError):
        W("a ?")


def test_batch_canonical_matches_scalar():
    for m in range(1, 7):
        cores = [w for w in itertools.product(range(4), repeat=m) if fg.is_very_reduced(w)]
        keys, period = fg.batch_canonical(np.array(cores), 2)
        for w, k, p in zip(cores, keys, period):
            c = fg.canonical_class(w)
            assert fg.decode_key(k, m, 2) == c.canonical
            assert p == fg.smallest_period(w)


# --- properties ---------------------------------------------------------------

@given(raw_words)
def test_reduce_idempotent_and_parity(w):
    r = fg.reduce(w)
    assert fg.reduce(r) == r
    assert fg.is_reduced(r)
    assert len(r) % 2 == len(w) % 2


@given(reduced_words)
def test_cyclic_reduce_round_trip(w):
    core, conj = fg.cyclic_reduce(w)
    assert fg.reduce(conj + core + fg.invert(conj)) == w
    assert core == () or fg.is_very_reduced(core)


@given(nonempty_cores, st.data())
def test_class_invariant_under_rotation_and_inversion(core, data):
    c = fg.canonical_class(core)
    j = data.draw(st.integers(0, len(core) - 1))
    assert fg.canonical_class(core[j:] + core[:j]) == c
    assert fg.canonical_class(fg.invert(core)) == c
    conj = data.draw(reduced_words)
    assert fg.canonical_class(fg.reduce(conj + core + fg.invert(conj))) == c


@given(nonempty_cores)
def test_conj_class_invariants(core):
    c = fg.canonical_class(core)
    assert fg.is_very_reduced(c.canonical)
    assert c.primitive_root * c.power == c.canonical
    inv = fg.invert(c.canonical)
    n = len(inv)
    assert all(c.canonical <= r for r in fg.rotations(c.canonical))
    assert all(c.canonical <= inv[j:] + inv[:j] for j in range(n))


@given(nonempty_cores)
def test_rotation_count_divides_length(core):
    k = len(fg.rotations(core))
    assert len(core) % k == 0
    assert (k == len(core)) == fg.is_primitive(core)


@given(reduced_words)
def test_format_parse_round_trip(w):
    assert fg.parse_word(fg.format_word(w, 2), 2) == w
    assert fg.parse_word(fg.format_word(w, 27), 27) == w
