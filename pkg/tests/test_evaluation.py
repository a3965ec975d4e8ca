import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obfsim.detectors import (DynamicDetector, FlipDetector, GroundTruthDetector,
                              ImportFlagDetector, TrivialDetector)
from obfsim.evaluation import (CSV_COLUMNS, EVADES, INCONCLUSIVE, NOT_EVADES,
                               ErrorEstimate, ReportError, block_inputs, block_targets,
                               ci_halfwidth, compare, decide_evasion, emit_report,
                               estimate_errors, evasion_run, evasion_test,
                               result_row, run_proposition_suite, utility_test)
from obfsim.obfuscators import (CipherEmbeddedObfuscator, HtdRandomObfuscator,
                                IdentityObfuscator)
from obfsim.toyvm import Label, PopulationConfig, generate_population


@pytest.fixture(scope="module")
def pset():
    return generate_population(PopulationConfig(20, 20), 31)


def est(a, b, n=10_000):
    return ErrorEstimate(a, b, n, ci_halfwidth(a, n), ci_halfwidth(b, n))


def test_ci_halfwidth():
    assert ci_halfwidth(0.5, 10_000) == pytest.approx(1.96 * 0.005)
    assert ci_halfwidth(0.0, 100) == 0.0


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_trivial_sum_is_one(pset, p):
    e = estimate_errors(TrivialDetector(p).fit(pset), pset, 5000, 1)
    assert abs(e.total - 1.0) <= 0.02
    assert abs(e.alpha_hat - p) <= 0.03


def test_flip_sum_is_one(pset):
    det = FlipDetector(GroundTruthDetector()).fit(pset)
    e = estimate_errors(det, pset, 2000, 0)
    assert e.alpha_hat == 1.0 and e.beta_hat == 1.0
    perfect = estimate_errors(GroundTruthDetector().fit(pset), pset, 2000, 0)
    assert perfect.alpha_hat == 0.0 and perfect.beta_hat == 0.0


def test_estimates_reproducible(pset):
    det = TrivialDetector(0.4).fit(pset)
    assert estimate_errors(det, pset, 1000, 7) == estimate_errors(det, pset, 1000, 7)


def test_estimate_needs_both_classes(pset):
    only_benign = generate_population(PopulationConfig(3, 0), 0)
    with pytest.raises(ValueError):
        estimate_errors(TrivialDetector().fit(only_benign), only_benign, 10, 0)
    with pytest.raises(ValueError):
        estimate_errors(TrivialDetector().fit(pset), pset, 0, 0)


def test_identity_gives_exactly_equal_estimates(pset):
    verdict = evasion_test(IdentityObfuscator(), TrivialDetector(0.3), pset, 3000, 5)
    assert verdict.pre == verdict.post
    assert verdict.verdict == NOT_EVADES


def test_cipher_embedded_evades_import_flag(pset):
    det = ImportFlagDetector(DynamicDetector(TrivialDetector(0.0)))
    verdict, oset, fitted = evasion_run(CipherEmbeddedObfuscator(random_state=1), det,
                                        pset, 2000, 3)
    assert verdict.post.alpha_hat == 1.0 and verdict.post.beta_hat == 0.0
    assert verdict.verdict == EVADES
    assert len(oset) == len(pset)


@pytest.mark.parametrize("pre,post,expected", [
    ((0.1, 0.1), (0.1, 0.1), NOT_EVADES),     # equal: antecedent holds, consequent fails
    ((0.1, 0.1), (0.1, 0.5), EVADES),         # beta rises
    ((0.1, 0.1), (0.5, 0.1), EVADES),         # alpha rises: antecedent false
    ((0.1, 0.3), (0.05, 0.2), NOT_EVADES),    # both fall
    ((0.1, 0.1), (0.101, 0.1), INCONCLUSIVE), # alpha within noise, beta not above
    ((0.1, 0.1), (0.101, 0.5), EVADES),       # consequent settles it
])
def test_decide_evasion_table(pre, post, expected):
    assert decide_evasion(est(*pre), est(*post)).verdict == expected


@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_compare_with_self_is_equal(a, b):
    assert compare(a, 0.01, a, 0.01) == "EQUAL"
    assert decide_evasion(est(a, b), est(a, b)).verdict == NOT_EVADES


def test_block_inputs_reach_block(pset):
    for i in pset.indices(Label.MALWARE):
        p = pset.programs[i]
        xs = block_inputs(p, pset.probe_inputs)
        assert xs
    targets = block_targets(pset, per_program=1)
    assert len(targets) == 20 and all(len(v[0]) == 1 for v in targets.values())


def test_utility_identity_and_htd(pset):
    targets = block_targets(pset, per_program=2)
    assert utility_test(IdentityObfuscator(), pset, targets, 10_000).useful
    small = utility_test(HtdRandomObfuscator(8, random_state=1), pset, targets, 100_000)
    assert small.min_fraction == 1.0
    big = utility_test(HtdRandomObfuscator(128, random_state=1), pset,
                       dict(list(targets.items())[:3]), 20_000)
    assert big.min_fraction == 0.0 and not big.useful


def _rows(pset):
    v = evasion_test(IdentityObfuscator(), TrivialDetector(0.5), pset, 500, 1)
    return [result_row("identity", "trivial(p=0.5)", v, 1)]


def test_report_byte_identical(tmp_path, pset):
    a = emit_report(_rows(pset), tmp_path / "a")
    b = emit_report(_rows(pset), tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    header = a[1].read_text().splitlines()[0]
    assert header.split(",") == list(CSV_COLUMNS)
    data = json.loads(a[0].read_text())
    assert data[0]["verdict"] == NOT_EVADES and "detail" in data[0]


def test_report_empty(tmp_path):
    j, c = emit_report([], tmp_path)
    assert json.loads(j.read_text()) == []
    assert c.read_text() == ",".join(CSV_COLUMNS) + "\n"


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_report_unwritable_permissions(tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    with pytest.raises(ReportError):
        emit_report([], d)


def test_report_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError):
        emit_report([], blocker / "sub")


def test_suite_unknown():
    with pytest.raises(ValueError):
        run_proposition_suite("P9")


def test_p1_suite_small():
    out = run_proposition_suite("P1", {"trials": 2000}, seed=4)
    assert out["pass"] and len(out["rows"]) == 5
    assert run_proposition_suite("P1", {"trials": 2000}, seed=4) == out
