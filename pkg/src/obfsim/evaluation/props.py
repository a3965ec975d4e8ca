"""Reproduction suites for the four propositions of the formal model."""
from __future__ import annotations

import numpy as np

from ..detectors import (DetectorBudget, DynamicDetector, FingerprintDetector,
                         GroundTruthDetector, ImportFlagDetector, SignatureDetector,
                         TrivialDetector, describe)
from ..obfuscators import (Base64Obfuscator, CipherEmbeddedObfuscator,
                           HtdRandomObfuscator)
from ..toyvm import Label, PopulationConfig, generate_population
from .estimates import (DEFAULT_TRIALS, block_targets, decide_evasion,
                        estimate_errors, utility_test)

SUITES = ("P1", "P2", "P3", "P4")

DEFAULTS = {
    "P1": {"ps": [0.0, 0.25, 0.5, 0.75, 1.0], "trials": DEFAULT_TRIALS, "tol": 0.02,
           "population": {"benign": 20, "malware": 20}},
    "P2": {"trials": DEFAULT_TRIALS, "tol": 0.02,
           "population": {"benign": 100, "malware": 100,
                          "equivalent_classes": [["BENIGN", 4], ["MALWARE", 4]]},
           "extra_benign_mislabels": 9, "extra_malware_mislabels": 9,
           "max_steps": 10_000},
    "P3": {"trials": DEFAULT_TRIALS, "pairs": 50, "keyspace_bits": 128,
           "max_steps": 2_000, "min_sum": 0.98},
    "P4": {"pairs": 50, "keyspace_bits": 128, "budget": 1_000_000,
           "inputs_per_program": 1},
}


def _merged(which, config):
    cfg = {k: v for k, v in DEFAULTS[which].items()}
    cfg.update(config or {})
    return cfg


def _p1(cfg, seed):
    pset = generate_population(PopulationConfig.from_dict(cfg["population"]), seed)
    rows = []
    for k, p in enumerate(cfg["ps"]):
        det = TrivialDetector(p).fit(pset)
        est = estimate_errors(det, pset, cfg["trials"], seed + k)
        rows.append({"p": p, **est.to_dict(), "sum": est.total,
                     "pass": abs(est.total - 1.0) <= cfg["tol"]})
    return {"rows": rows, "pass": all(r["pass"] for r in rows)}


def _p2_mislabels(pset, cfg, seed):
    """One mislabel inside the first class of each label, extras outside."""
    rng = np.random.RandomState(seed)
    ids = []
    classes = cfg["population"].get("equivalent_classes", [])
    for label, extra in ((Label.BENIGN, cfg["extra_benign_mislabels"]),
                         (Label.MALWARE, cfg["extra_malware_mislabels"])):
        idx = pset.indices(label)
        sizes = [int(s) for name, s in classes if Label[str(name).upper()] == label]
        in_class = sum(sizes)
        if sizes:
            ids.append(pset.programs[idx[0]].id)
        rest = idx[in_class:]
        chosen = rng.choice(rest, size=min(extra, len(rest)), replace=False)
        ids.extend(pset.programs[i].id for i in sorted(chosen))
    return tuple(ids)


def _p2(cfg, seed):
    pset = generate_population(PopulationConfig.from_dict(cfg["population"]), seed)
    mislabel = _p2_mislabels(pset, cfg, seed)
    base = GroundTruthDetector(mislabel=mislabel)
    det = FingerprintDetector(base, DetectorBudget(max_steps=cfg["max_steps"]),
                              random_state=seed).fit(pset)
    y = pset.y
    alpha_emp = float(np.mean(det.labels_[y == 0] == 1))
    beta_emp = float(np.mean(det.labels_[y == 1] == 0))
    pre = estimate_errors(det, pset, cfg["trials"], seed)
    mixed = det.store_.mixed()
    rows = []
    for name, obf in (("base64", Base64Obfuscator()),
                      ("cipher_embedded", CipherEmbeddedObfuscator(random_state=seed))):
        oset = obf.fit(pset).transform(pset)
        post = estimate_errors(det, oset, cfg["trials"], seed)
        p1 = det.predict_proba(oset)[:, 1]
        # Empirical verdict frequency of each mixed class over fresh coins.
        class_rows = []
        for digest, (size, ones) in sorted(mixed.items()):
            members = [i for i, p in enumerate(pset.programs)
                       if det._digest(p) == digest]
            coins = np.random.RandomState(seed + 1).random_sample((cfg["trials"], len(members)))
            freq = float(np.mean(det.threshold(p1[members], coins)))
            class_rows.append({"size": size, "mislabelled": ones if y[members[0]] == 0
                               else size - ones, "rate_1": ones / size, "freq_1": freq})
        verdict = decide_evasion(pre, post)
        rows.append({
            "obfuscator": name, "alpha_emp": alpha_emp, "beta_emp": beta_emp,
            "alpha_post": post.alpha_hat, "beta_post": post.beta_hat,
            "alpha_ci": post.alpha_ci, "beta_ci": post.beta_ci,
            "mixed_classes": class_rows, "verdict": verdict.verdict,
            "pass": (abs(post.alpha_hat - alpha_emp) <= cfg["tol"]
                     and abs(post.beta_hat - beta_emp) <= cfg["tol"]),
        })
    return {"programs": len(pset), "mislabel": list(mislabel), "rows": rows,
            "pass": all(r["pass"] for r in rows)}


def p3_battery(max_steps):
    budget = DetectorBudget(max_steps=max_steps)
    quiet = TrivialDetector(0.0)
    dynamic = DynamicDetector(quiet, budget=budget)
    return [
        ImportFlagDetector(dynamic),
        SignatureDetector(),
        FingerprintDetector(dynamic, budget=budget),
        dynamic,
    ]


def _paired(cfg, seed):
    n = cfg["pairs"]
    return generate_population(PopulationConfig(n, n, paired=True), seed)


def _p3(cfg, seed):
    pset = _paired(cfg, seed)
    oset = HtdRandomObfuscator(cfg["keyspace_bits"], random_state=seed).fit(pset).transform(pset)
    rows = []
    for det in p3_battery(cfg["max_steps"]):
        det = det.fit(pset)
        pre = estimate_errors(det, pset, cfg["trials"], seed)
        post = estimate_errors(det, oset, cfg["trials"], seed)
        rows.append({"detector": describe(det), "alpha": pre.alpha_hat,
                     "beta": pre.beta_hat, "alpha_post": post.alpha_hat,
                     "beta_post": post.beta_hat, "sum_post": post.total,
                     "verdict": decide_evasion(pre, post).verdict,
                     "pass": post.total >= cfg["min_sum"]})
    return {"rows": rows, "min_sum_post": min(r["sum_post"] for r in rows),
            "pass": all(r["pass"] for r in rows)}


def _p4(cfg, seed):
    pset = _paired(cfg, seed)
    targets = block_targets(pset, per_program=cfg["inputs_per_program"])
    report = utility_test(HtdRandomObfuscator(cfg["keyspace_bits"], random_state=seed),
                          pset, targets, cfg["budget"])
    fractions = list(report.fractions.values())
    return {"programs": len(fractions), "budget": cfg["budget"],
            "min_fraction": report.min_fraction, "max_fraction": max(fractions),
            "useful": report.useful, "pass": report.min_fraction == 0.0}


_RUNNERS = {"P1": _p1, "P2": _p2, "P3": _p3, "P4": _p4}


def run_proposition_suite(which: str, config: dict | None = None, seed: int = 0) -> dict:
    if which not in _RUNNERS:
        raise ValueError(f"unknown suite {which!r}; valid: {', '.join(SUITES)}")
    cfg = _merged(which, config)
    out = _RUNNERS[which](cfg, seed)
    return {"suite": which, "seed": seed, "config": cfg, **out}
