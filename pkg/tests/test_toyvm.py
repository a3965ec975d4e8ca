import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obfsim.toyvm import (Emit, EmitIf, InputPredicate, Label, PopulationConfig,
                          PopulationError, Program, ProgramError, ProgramSet,
                          check_probe_completeness, fingerprint, generate_population,
                          is_malicious_ground_truth, run, serialize_block, parse_block)
from obfsim.obfuscators import MalformedContainerError

N = 16


def prog(*instrs, block=None, pid="p"):
    return Program(pid, instrs, N, block)


def test_emit_and_emit_if():
    p = prog(Emit("a"), EmitIf(InputPredicate("PREFIX", "10"), "b"),
             EmitIf(InputPredicate("EQUALS", "1" * N), "c"))
    assert run(p, "10" + "0" * 14).outputs == ("a", "b")
    assert run(p, "1" * N).outputs == ("a", "c")
    assert run(p, "0" * N).outputs == ("a",)
    assert run(p, "0" * N).steps_used == 3


def test_budget_truncates():
    p = prog(*(Emit(str(i)) for i in range(10)))
    t = run(p, "0" * N, budget=4)
    assert t.outputs == ("0", "1", "2", "3")
    assert not t.terminated and t.steps_used == 4
    full = run(p, "0" * N, budget=10)
    assert full.terminated and len(full.outputs) == 10


def test_bad_input_rejected():
    p = prog(Emit("a"))
    with pytest.raises(ProgramError):
        run(p, "012" + "0" * 13)
    with pytest.raises(ProgramError):
        run(p, "0" * (N - 1))
    with pytest.raises(ProgramError):
        run(p, "0" * N, budget=0)


def test_program_validation():
    with pytest.raises(ProgramError):
        prog(Emit("a"), block=(0, 2))
    with pytest.raises(ProgramError):
        InputPredicate("SUFFIX", "1")
    with pytest.raises(ProgramError):
        prog(EmitIf(InputPredicate("PREFIX", "1" * (N + 1)), "x"))


def test_witness_satisfies_predicate():
    for kind in ("EQUALS", "PREFIX"):
        pred = InputPredicate(kind, "1011" if kind == "PREFIX" else "1" * N)
        assert pred(pred.witness(N))


def test_malicious_trace():
    p = prog(Emit("BEN:x"), EmitIf(InputPredicate("PREFIX", "1"), "MAL:y"))
    assert run(p, "1" * N).malicious
    assert not run(p, "0" * N).malicious
    assert is_malicious_ground_truth(p) == Label.MALWARE
    assert is_malicious_ground_truth(prog(Emit("BEN:x"))) == Label.BENIGN


def test_fingerprint_matches_independent_digest():
    p = prog(Emit("a"), EmitIf(InputPredicate("PREFIX", "1"), "b"))
    probes = ["0" * N, "1" * N]
    expect = hashlib.sha256(json.dumps(
        [["0" * N, ["a"]], ["1" * N, ["a", "b"]]], separators=(",", ":")).encode()).digest()
    assert fingerprint(p, probes) == expect


def test_fingerprint_separates_behaviour():
    probes = ["0" * N, "1" * N]
    a = prog(Emit("a"), EmitIf(InputPredicate("PREFIX", "1"), "b"))
    b = prog(EmitIf(InputPredicate("PREFIX", "1"), "b"), Emit("a"))
    assert fingerprint(a, probes) != fingerprint(b, probes)
    assert fingerprint(a, probes) == fingerprint(a.replace(id="other"), probes)


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=20)
preds = st.builds(InputPredicate, st.sampled_from(["EQUALS", "PREFIX"]),
                  st.text(alphabet="01", min_size=1, max_size=N))
instrs = st.one_of(st.builds(Emit, texts), st.builds(EmitIf, preds, texts))


@settings(max_examples=150, deadline=None)
@given(block=st.lists(instrs, max_size=6), b64=st.booleans())
def test_block_codec_round_trip(block, b64):
    data = serialize_block(block, base64_text=b64)
    assert parse_block(data, base64_text=b64) == tuple(block)
    assert serialize_block(parse_block(data, b64), b64) == data


@pytest.mark.parametrize("junk", [b"", b"\xff\xfe", b"{}", b'[{"op":"JUMP"}]'])
def test_parse_block_malformed(junk):
    with pytest.raises(MalformedContainerError):
        parse_block(junk)


def test_population_deterministic_and_byte_stable():
    cfg = PopulationConfig(12, 9)
    a = generate_population(cfg, 5).to_json()
    assert a == generate_population(cfg, 5).to_json()
    assert a != generate_population(cfg, 6).to_json()
    assert ProgramSet.from_json(a).to_json() == a


def test_population_labels_are_ground_truth():
    pset = generate_population(PopulationConfig(30, 30), 1)
    assert sum(pset.y == 0) == 30 and sum(pset.y == 1) == 30
    for p, lab in zip(pset.programs, pset.labels):
        assert is_malicious_ground_truth(p) == lab
        assert p.block is not None


def test_probe_set_reaches_every_malicious_emission():
    pset = generate_population(PopulationConfig(20, 20), 2)
    check_probe_completeness(pset.programs, pset.labels, pset.probe_inputs)
    for i in pset.indices(Label.MALWARE):
        p = pset.programs[i]
        assert any(run(p, q).malicious for q in pset.probe_inputs)


def test_paired_templates():
    pset = generate_population(PopulationConfig(7, 7, paired=True), 3)
    ben = [pset.programs[i] for i in pset.indices(Label.BENIGN)]
    mal = [pset.programs[i] for i in pset.indices(Label.MALWARE)]
    assert len(ben) == len(mal) == 7
    for b, m in zip(ben, mal):
        # Same instructions outside the block; only the block's text changes.
        assert b.block == m.block
        s, e = b.block
        assert b.instructions[:s] == m.instructions[:s]
        assert b.instructions[e:] == m.instructions[e:]
        assert b.instructions[s:e] != m.instructions[s:e]
    with pytest.raises(PopulationError):
        generate_population(PopulationConfig(3, 4, paired=True), 0)


def test_equivalent_classes():
    cfg = PopulationConfig(10, 10, equivalent_classes=(("BENIGN", 4),))
    pset = generate_population(cfg, 4)
    ben = [pset.programs[i] for i in pset.indices(Label.BENIGN)]
    fps = [fingerprint(p, pset.probe_inputs) for p in ben]
    assert len(set(fps[:4])) == 1
    assert fps[4] not in fps[:4]


@pytest.mark.parametrize("cfg", [
    PopulationConfig(0, 0),
    PopulationConfig(6000, 6000),
])
def test_population_rejects(cfg):
    with pytest.raises(PopulationError):
        generate_population(cfg, 0)


def test_population_config_unknown_key():
    with pytest.raises(PopulationError):
        PopulationConfig.from_dict({"benign": 1, "malware": 1, "colour": "red"})


def test_sampling_weights_checked():
    pset = generate_population(PopulationConfig(2, 2), 0)
    with pytest.raises(PopulationError):
        ProgramSet(pset.programs, pset.labels, pset.probe_inputs, (0.5, 0.5, 0.5, 0.5))
    assert np.isclose(sum(pset.sampling_weights), 1.0)
