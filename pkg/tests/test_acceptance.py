"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import hashlib
import itertools
import json
import math
import time

import numpy as np
import pytest

from obfsim.cli import main
from obfsim.detectors import (DetectorBudget, DynamicDetector, EnvBruteforceDetector,
                              ImportFlagDetector, SignatureDetector, TrivialDetector)
from obfsim.environment import (EnvVariable, KeyFinderSpec, ProfileUniverse, TargetSpec,
                                entropy_bits, p_target, sample_profile, solve_puzzle)
from obfsim.evaluation import (EVADES, NOT_EVADES, decide_evasion, estimate_errors,
                               evasion_run, run_proposition_suite)
from obfsim.obfuscators import (CipherEmbeddedObfuscator, DeniableXorObfuscator,
                                HtdEnvObfuscator, deniable_pair)
from obfsim.toyvm import Label, PopulationConfig, generate_population, run


@pytest.fixture
def verdict_line(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def test_ac1_trivial_detector_sum_is_one(verdict_line):
    t0 = time.perf_counter()
    out = run_proposition_suite("P1", {"trials": 10_000}, seed=101)
    elapsed = time.perf_counter() - t0
    worst = max(abs(r["sum"] - 1.0) for r in out["rows"])
    ps = [r["p"] for r in out["rows"]]
    ok = ps == [0.0, 0.25, 0.5, 0.75, 1.0] and worst <= 0.02 and elapsed < 10
    verdict_line("AC1", ok, f"max |a+b-1| = {worst:.4f} over p={ps}, {elapsed:.1f}s")


def test_ac2_fingerprint_tracks_empirical_alpha(verdict_line):
    t0 = time.perf_counter()
    out = run_proposition_suite("P2", {"trials": 10_000}, seed=202)
    elapsed = time.perf_counter() - t0
    classes = out["rows"][0]["mixed_classes"]
    one_mislabel = any(c["size"] == 4 and c["mislabelled"] == 1 for c in classes)
    gaps = {r["obfuscator"]: abs(r["alpha_post"] - r["alpha_emp"]) for r in out["rows"]}
    ok = (out["programs"] == 200 and one_mislabel and set(gaps) == {"base64", "cipher_embedded"}
          and max(gaps.values()) <= 0.02 and elapsed < 60)
    verdict_line("AC2", ok, f"|a_O - a_emp| = {gaps}, 4-class with one mislabel: "
                            f"{one_mislabel}, {elapsed:.1f}s")


def test_ac3_import_flag_on_embedded_cipher(verdict_line):
    pset = generate_population(PopulationConfig(50, 50), 303)
    verdict, _, _ = evasion_run(CipherEmbeddedObfuscator(random_state=3), ImportFlagDetector(),
                                pset, 10_000, 303)
    a, b = verdict.post.alpha_hat, verdict.post.beta_hat
    ok = a == 1.0 and b == 0.0 and verdict.verdict == EVADES
    verdict_line("AC3", ok, f"a_O={a} b_O={b} verdict={verdict.verdict}")


def test_ac4_random_key_htd_defeats_battery(verdict_line):
    t0 = time.perf_counter()
    p3 = run_proposition_suite("P3", {"pairs": 50, "keyspace_bits": 128, "max_steps": 2_000,
                                      "trials": 10_000}, seed=404)
    p4 = run_proposition_suite("P4", {"pairs": 50, "keyspace_bits": 128,
                                      "budget": 1_000_000}, seed=404)
    elapsed = time.perf_counter() - t0
    sums = {r["detector"]: round(r["sum_post"], 4) for r in p3["rows"]}
    ok = (len(sums) == 4 and min(sums.values()) >= 0.98 and p4["min_fraction"] == 0.0
          and p4["programs"] == 50 and elapsed < 300)
    verdict_line("AC4", ok, f"a_O+b_O = {sums}; utility min = {p4['min_fraction']} "
                            f"(max {p4['max_fraction']}), {elapsed:.1f}s")


def _uniform_universe(nvars, size):
    return ProfileUniverse(tuple(
        EnvVariable.uniform(f"v{i}", [f"{j:04d}" for j in range(size)]) for i in range(nvars)))


def _env_keyed(pset, universe, spec, rng):
    """Each program sealed under its own sampled target profile."""
    targets = [sample_profile(universe, rng) for _ in pset.programs]
    sealed = [HtdEnvObfuscator("FIXED", spec, t, random_state=rng).obfuscate(p)
              for p, t in zip(pset.programs, targets)]
    return pset.with_programs(sealed), targets


def _recoveries(det, oset):
    mal = oset.indices(Label.MALWARE)
    return sum(det.search(oset.programs[i]).complete for i in mal), len(mal)


def test_ac5_environmental_keying_regimes(verdict_line):
    t0 = time.perf_counter()
    pset = generate_population(PopulationConfig(100, 100), 505)
    rng = np.random.RandomState(505)
    budget = DetectorBudget(max_key_candidates=2**16)

    low = _uniform_universe(2, 32)
    assert low.size == 2**10
    low_set, _ = _env_keyed(pset, low, KeyFinderSpec("CONCAT", low.names), rng)
    det = EnvBruteforceDetector(low, DynamicDetector(TrivialDetector(0.0)),
                                budget=budget).fit(pset)
    got_low = _recoveries(det, low_set)
    v_low = decide_evasion(estimate_errors(det, pset, 10_000, 5),
                           estimate_errors(det, low_set, 10_000, 5))

    high = _uniform_universe(4, 1024)
    assert high.size == 2**40
    high_set, targets = _env_keyed(pset, high, KeyFinderSpec("CONCAT", high.names), rng)
    # No sealed target lies among the first 2**16 enumerated profiles.
    searched = {tuple(d.values()) for d, _ in
                itertools.islice(high.iter_by_probability(), 2**16)}
    unreachable = not searched.intersection(tuple(t.values()) for t in targets)
    det_hi = EnvBruteforceDetector(high, DynamicDetector(TrivialDetector(0.0)),
                                   on_exhausted=TrivialDetector(0.5), budget=budget).fit(pset)
    got_high = _recoveries(det_hi, high_set)
    v_high = decide_evasion(estimate_errors(det_hi, pset, 10_000, 5),
                            estimate_errors(det_hi, high_set, 10_000, 5))
    elapsed = time.perf_counter() - t0
    ok = (got_low == (100, 100) and v_low.verdict == NOT_EVADES
          and got_high == (0, 100) and v_high.verdict == EVADES
          and unreachable and elapsed < 300)
    verdict_line("AC5", ok, f"low: {got_low[0]}/{got_low[1]} {v_low.verdict}; "
                            f"high: {got_high[0]}/{got_high[1]} {v_high.verdict}, {elapsed:.1f}s")


def test_ac6_ebowla_signature_weakness(verdict_line):
    pset = generate_population(PopulationConfig(100, 100), 606)
    spec = KeyFinderSpec("CONCAT", ("user",))
    target = {"user": "alice"}
    mal = pset.indices(Label.MALWARE)
    sig0 = SignatureDetector().fit(pset)
    sig4 = SignatureDetector(known_offsets=(4,)).fit(pset)

    def flagged(det, variant, offset):
        out = HtdEnvObfuscator(variant, spec, target, offset=offset,
                               random_state=6).transform(pset)
        return int(det.predict_proba(out)[mal, 1].sum())

    t0, t4, fixed = flagged(sig0, "EBOWLA", 0), flagged(sig4, "EBOWLA", 4), \
        flagged(sig4, "FIXED", 0)
    ok = len(mal) == 100 and (t0, t4, fixed) == (100, 100, 0)
    verdict_line("AC6", ok, f"EBOWLA t=0: {t0}/100, EBOWLA t=4: {t4}/100, FIXED: {fixed}/100")


def test_ac7_deniable_algebra_and_horizon(verdict_line):
    rng = np.random.RandomState(707)
    bad = 0
    for _ in range(10_000):
        m = rng.bytes(rng.randint(0, 65))
        p = rng.bytes(rng.randint(0, 65))
        pair = deniable_pair(m, p, rng)
        n = max(len(m), len(p))
        if (bytes(c ^ k for c, k in zip(pair.ct, pair.k1)) != m.ljust(n, b" ")
                or bytes(c ^ k for c, k in zip(pair.ct, pair.k2)) != p.ljust(n, b" ")):
            bad += 1

    pset = generate_population(PopulationConfig(100, 100), 707)
    out = DeniableXorObfuscator(available_from=500, random_state=7).transform(pset)
    mal = pset.indices(Label.MALWARE)
    early = DynamicDetector(TrivialDetector(0.0), horizon=499).fit(pset)
    late = DynamicDetector(TrivialDetector(0.0), horizon=500).fit(pset)
    early_1 = int(early.predict_proba(out)[mal, 1].sum())
    late_1 = int(late.predict_proba(out)[mal, 1].sum())
    # Before the schedule the container opens to its benign cover.
    cover_shown = all(
        any(o.startswith("BEN:") for q in pset.probe_inputs
            for o in run(out.programs[i], q, clock=499).outputs) for i in mal)
    ok = bad == 0 and early_1 == 0 and late_1 == len(mal) == 100 and cover_shown
    verdict_line("AC7", ok, f"algebra failures {bad}/10000; horizon before: {early_1}/100 "
                            f"flagged, after: {late_1}/100 flagged")


def _random_universe(rng):
    while True:
        sizes = [int(rng.randint(1, 40)) for _ in range(rng.randint(1, 5))]
        if math.prod(sizes) <= 2**16:
            break
    variables = []
    for i, n in enumerate(sizes):
        w = rng.random_sample(n) + 0.05
        w = w / w.sum()
        variables.append(EnvVariable(f"v{i}", [f"x{j}" for j in range(n)], tuple(w)))
    return ProfileUniverse(tuple(variables))


def test_ac8_oracle_equivalence(verdict_line):
    rng = np.random.RandomState(808)
    worst = 0.0
    for _ in range(50):
        u = _random_universe(rng)
        require = {v.name: v.domain[rng.randint(len(v.domain))]
                   for v in u.variables if rng.rand() < 0.6}
        target = TargetSpec(require)
        brute = math.fsum(u.probability(p) for p in u.iter_profiles() if target.matches(p))
        worst = max(worst, abs(p_target(u, target) - brute) / max(brute, 1e-300))
    ent_err = 0.0
    for _ in range(50):
        sizes = [int(rng.randint(1, 300)) for _ in range(rng.randint(1, 6))]
        u = ProfileUniverse(tuple(EnvVariable.uniform(f"v{i}", [str(j) for j in range(n)])
                                  for i, n in enumerate(sizes)))
        ent_err = max(ent_err, abs(entropy_bits(u) - math.log2(math.prod(sizes))))
    nonces = [solve_puzzle(f"seed-{s}", 8)[0] for s in range(1000)]
    mean = float(np.mean(nonces))
    ok = worst <= 1e-12 and ent_err <= 1e-9 and 256 * 0.8 <= mean <= 256 * 1.2
    verdict_line("AC8", ok, f"p_target rel err {worst:.1e}, entropy err {ent_err:.1e}, "
                            f"mean nonce {mean:.1f}")


def _digests(root):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_ac9_cli_determinism(tmp_path, verdict_line, capsys):
    (tmp_path / "pop.json").write_text(json.dumps({"benign": 10, "malware": 10}))
    (tmp_path / "u.json").write_text(json.dumps({"variables": [
        {"name": "user", "domain": ["a", "b", "c", "d"], "weights": [0.25] * 4}]}))
    (tmp_path / "exp.json").write_text(json.dumps({
        "population": {"benign": 10, "malware": 10}, "trials": 1000,
        "universe": "u.json", "target": {"user": "c"},
        "obfuscators": [{"type": "identity"}, {"type": "base64"},
                        {"type": "cipher_embedded"},
                        {"type": "htd_env", "params": {"keyfinder":
                                                       {"strategy": "CONCAT", "vars": ["user"]}}}],
        "detectors": [{"type": "import_flag", "fallback": {"type": "dynamic"}},
                      {"type": "env_bruteforce", "fallback": {"type": "dynamic"}},
                      {"type": "trivial", "params": {"p": 0.5}}],
    }))
    (tmp_path / "props.json").write_text(json.dumps({"P1": {"trials": 2000}}))
    kf = json.dumps({"keyfinder": {"strategy": "CONCAT", "vars": ["user"]}})
    d = str(tmp_path)

    def commands(out):
        return [
            ["gen", "--config", f"{d}/pop.json", "--seed", "9", "--out", f"{out}/gen"],
            *[["obfuscate", f"{d}/run_a/gen/programs.json", "--obfuscator", name, "--seed", "9",
               "--out", f"{out}/obf_{name}"]
              for name in ("identity", "base64", "xor1", "cipher_embedded", "htd_random",
                           "deniable_xor")],
            ["obfuscate", f"{d}/run_a/gen/programs.json", "--obfuscator", "htd_env", "--params",
             kf, "--universe", f"{d}/u.json", "--target", '{"user": "b"}', "--seed", "9",
             "--out", f"{out}/obf_htd_env"],
            ["evaluate", "--config", f"{d}/exp.json", "--seed", "9", "--out", f"{out}/eval"],
            ["props", "P1", "--config", f"{d}/props.json", "--seed", "9", "--out",
             f"{out}/props"],
        ]

    codes = []
    for run_dir in ("run_a", "run_b"):
        for argv in commands(f"{d}/{run_dir}"):
            codes.append(main(argv))
    capsys.readouterr()
    a, b = _digests(tmp_path / "run_a"), _digests(tmp_path / "run_b")
    ok = set(codes) == {0} and a == b and len(a) == 11
    verdict_line("AC9", ok, f"{len(a)} output files, identical digests: {a == b}, "
                            f"exit codes {sorted(set(codes))}")
