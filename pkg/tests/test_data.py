import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paat.data import (
    SECTION,
    Document,
    GenSpec,
    InputError,
    ParseError,
    SpecError,
    Vocab,
    audit_corpus,
    build_vocab,
    generate_corpus,
    gold_matrix,
    label_name,
    parse_label,
    read_dataset,
    read_keyvalue,
    region_bounds,
    signature_ids,
    split_dataset,
    token_string,
    write_dataset,
)

SMALL = dict(num_labels=5, vocab_size=300, signature_per_label=8, doc_len_min=120, doc_len_max=150,
             labels_per_doc_min=0, labels_per_doc_max=3, regions=6, dispersion=6, num_docs=40, seed=3)


def small(**kw):
    return GenSpec(**dict(SMALL, **kw))


def doc(i, tokens="a b", gold=()):
    return Document(f"d{i:03d}", tuple(tokens.split()), frozenset(gold))


# -- documents and labels ----------------------------------------------------------


def test_document_rejects_empty_tokens():
    with pytest.raises(ValueError):
        Document("x", (), frozenset())


def test_label_names():
    assert label_name(0) == "C00" and label_name(19, 20) == "C19"
    assert parse_label("C07") == 7
    for bad in ("7", "Cx", "c01", ""):
        with pytest.raises(InputError):
            parse_label(bad)


# -- vocabulary ------------------------------------------------------------------


def test_vocab_ordering_example():
    docs = [doc(0, "a b a c"), doc(1, "b a b")]
    v = build_vocab(docs, min_freq=2)
    assert v.id("a") == 3 and v.id("b") == 4
    assert v.id("c") == 1


def test_vocab_min_freq_one_assigns_everything():
    docs = [doc(0, "z y x y")]
    v = build_vocab(docs, min_freq=1)
    assert v.assigned == ["y", "x", "z"]
    assert [v.token(i) for i in range(3)] == ["<pad>", "<unk>", "<sec>"]


def test_vocab_is_bijective_and_reserves_ids():
    v = Vocab(["p", "q"])
    assert [v.id(v.token(i)) for i in range(len(v))] == list(range(len(v)))
    with pytest.raises(ValueError):
        Vocab(["p", "p"])
    with pytest.raises(ValueError):
        Vocab(["<unk>"])
    with pytest.raises(KeyError):
        v.token(5)
    assert v.encode(["q", "nope", "p"]).tolist() == [4, 1, 3]


# -- generator --------------------------------------------------------------------


def test_generator_is_deterministic(tmp_path):
    a, b = generate_corpus(small()), generate_corpus(small())
    assert a == b
    write_dataset(a, tmp_path / "a.tsv")
    write_dataset(b, tmp_path / "b.tsv")
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert generate_corpus(small(seed=4)) != a


def test_concentrated_corpus_keeps_signatures_in_one_region():
    spec = small(dispersion=1, density=3)
    docs = generate_corpus(spec)
    for d in docs:
        regions = region_bounds(len(d.tokens), spec.regions)
        for label in d.gold:
            sig = {token_string(i) for i in signature_ids(spec, label)}
            hit = {r for r, (s, e) in enumerate(regions) for t in d.tokens[s:e] if t in sig}
            assert len(hit) == 1
            assert sum(t in sig for t in d.tokens) == 3


def test_dispersed_audit_by_scanning():
    spec = GenSpec(num_docs=60)  # 600 tokens, 6 regions of 100, dispersion 6
    docs = generate_corpus(spec)
    for d in docs:
        assert len(d.tokens) == 600
        for label in d.gold:
            sig = {token_string(i) for i in signature_ids(spec, label)}
            regions = {p // 100 for p, t in enumerate(d.tokens) if t in sig}
            assert regions == set(range(6))
    audit = audit_corpus(docs, spec)
    assert audit["min_regions_covered"] >= 6 and audit["stray_signature_tokens"] == 0


@pytest.mark.parametrize("kw", [dict(), dict(dispersion=3, density=2), dict(dispersion=1), dict(section_headers=True)])
def test_generated_corpus_passes_its_audit(kw):
    spec = small(**kw)
    docs = generate_corpus(spec)
    audit = audit_corpus(docs, spec)
    assert audit["stray_signature_tokens"] == 0
    assert audit["min_regions_covered"] >= spec.dispersion
    assert all(1 <= len(d.tokens) and d.gold <= set(range(spec.num_labels)) for d in docs)


def test_section_headers_open_every_region():
    spec = small(section_headers=True)
    for d in generate_corpus(spec):
        for s, _ in region_bounds(len(d.tokens), spec.regions):
            assert d.tokens[s] == SECTION


def test_infeasible_specs():
    with pytest.raises(SpecError, match="signature volume exceeds docLength"):
        GenSpec(doc_len_min=10, doc_len_max=10, signature_per_label=50).validate()
    with pytest.raises(SpecError):
        GenSpec(signature_per_label=4).validate()  # fewer than dispersion * density
    with pytest.raises(SpecError):
        GenSpec(num_labels=20, signature_per_label=100).validate()  # no noise left
    with pytest.raises(SpecError):
        GenSpec(dispersion=7).validate()
    with pytest.raises(SpecError):
        GenSpec(dispersion=0).validate()


def test_genspec_key_value(tmp_path):
    path = tmp_path / "g.cfg"
    path.write_text("# dispersed\nnum_labels = 7\nsection-headers=yes\n\nseed=5\n", encoding="utf-8")
    spec = GenSpec.from_mapping(read_keyvalue(path))
    assert spec.num_labels == 7 and spec.section_headers is True and spec.seed == 5
    assert GenSpec.from_mapping(dict(line.split("=") for line in spec.to_text().split())) == spec
    with pytest.raises(SpecError):
        GenSpec.from_mapping({"colour": "red"})
    path.write_text("novalue\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":1:"):
        read_keyvalue(path)


# -- files ------------------------------------------------------------------------


def test_round_trip_with_empty_labels(tmp_path):
    docs = [doc(0, "a b", ()), doc(1, "c", (0, 3))]
    path = tmp_path / "d.tsv"
    write_dataset(docs, path)
    assert path.read_text(encoding="utf-8") == "d000\ta b\t\nd001\tc\tC00;C03\n"
    assert read_dataset(path) == docs


def test_round_trip_on_generated_corpus(tmp_path):
    docs = generate_corpus(small())
    write_dataset(docs, tmp_path / "c.tsv", 5)
    assert read_dataset(tmp_path / "c.tsv", 5) == docs


@pytest.mark.parametrize("line,lineno", [
    ("d1\ta b\tC00\nd2\ta b\tC0x\n", 2),
    ("d1\ta b\n", 1),
    ("d1\ta b\tC00\textra\n", 1),
    ("d1\t \tC00\n", 1),
    ("\ta\tC00\n", 1),
    ("d1\ta\tC00;;C01\n", 1),
    ("d1\ta\tC00;C00\n", 1),
])
def test_parse_errors_name_the_line(tmp_path, line, lineno):
    path = tmp_path / "bad.tsv"
    path.write_text(line, encoding="utf-8")
    with pytest.raises(ParseError, match=f":{lineno}:"):
        read_dataset(path)


def test_label_outside_range_is_input_error(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("d1\ta\tC04\n", encoding="utf-8")
    with pytest.raises(InputError):
        read_dataset(path, num_labels=4)
    assert read_dataset(path, num_labels=5)[0].gold == {4}


# -- splits ------------------------------------------------------------------------


def test_split_sizes():
    docs = [doc(i) for i in range(100)]
    assert [len(s) for s in split_dataset(docs, (0.8, 0.1, 0.1), seed=0)] == [80, 10, 10]
    docs = [doc(i) for i in range(101)]
    assert [len(s) for s in split_dataset(docs, (0.8, 0.1, 0.1), seed=0)] == [81, 10, 10]
    docs = [doc(i) for i in range(2800)]
    assert [len(s) for s in split_dataset(docs, (2000 / 2800, 300 / 2800, 500 / 2800))] == [2000, 300, 500]


def test_split_is_seeded_and_order_free():
    docs = [doc(i) for i in range(30)]
    a = split_dataset(docs, seed=1)
    assert a == split_dataset(list(reversed(docs)), seed=1)
    assert a != split_dataset(docs, seed=2)


def test_split_errors():
    with pytest.raises(InputError):
        split_dataset([doc(0), doc(1)])
    with pytest.raises(InputError):
        split_dataset([doc(i) for i in range(10)], (0.5, 0.5, 0.0))
    with pytest.raises(InputError):
        split_dataset([doc(i) for i in range(10)], (0.5, 0.3, 0.3))


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 300), st.integers(0, 10_000))
def test_split_is_disjoint_and_covering(n, seed):
    docs = [doc(i) for i in range(n)]
    parts = split_dataset(docs, (0.7, 0.15, 0.15), seed=seed)
    ids = [d.id for p in parts for d in p]
    assert sorted(ids) == sorted(d.id for d in docs)
    assert len(set(ids)) == n


def test_gold_matrix():
    y = gold_matrix([doc(0, gold=(1,)), doc(1, gold=())], 3)
    assert y.tolist() == [[False, True, False], [False, False, False]]
    assert y.dtype == np.bool_
