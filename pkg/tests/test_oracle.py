import random
from fractions import Fraction as F

import pytest

from mpas.bench import gen_hard_input, gen_palette, gen_uniform_random
from mpas.core import Item
from mpas.oracle import (BoundReport, CertificateError, DualCertificate, OracleLimitError, bound_report,
                         brute_force_bins, build_dual_certificate, certify_ratio, check_dual_feasibility,
                         exact_optimal_bins, first_fit_decreasing, max_bin_weight, max_bin_weight_dp,
                         size_lower_bound)
from mpas.rematch import rematch_result
from mpas.scheduler import schedule_stream

HARD = [F(3438, 10000), F(2501, 10000), F(623, 10000)]


def test_size_lower_bound_examples():
    assert size_lower_bound([F(7, 10), F(7, 10)]) == 2
    assert size_lower_bound([]) == 0
    n = 297
    assert size_lower_bound([HARD[0]] * (2 * n) + [HARD[1]] * n + [HARD[2]] * n) == 297


def test_exact_examples():
    assert exact_optimal_bins([F(1, 2)]) == 1
    assert exact_optimal_bins([]) == 0
    assert exact_optimal_bins([HARD[0]] * 6 + [HARD[1]] * 3 + [HARD[2]] * 3) == 3


def test_exact_refuses_over_limit():
    with pytest.raises(OracleLimitError):
        exact_optimal_bins([F(1, 10)] * 25)
    with pytest.raises(OracleLimitError):
        exact_optimal_bins([F(1, 10)] * 6, limit=5)


def test_exact_matches_brute_force():
    rng = random.Random(17)
    for _ in range(60):
        sizes = [F(rng.randint(1, 100), 100) for _ in range(rng.randint(1, 9))]
        assert exact_optimal_bins(sizes) == brute_force_bins(sizes)


def test_bound_ordering():
    rng = random.Random(3)
    for _ in range(40):
        sizes = [F(rng.randint(1, 60), 60) for _ in range(rng.randint(1, 16))]
        opt = exact_optimal_bins(sizes)
        assert size_lower_bound(sizes) <= opt <= first_fit_decreasing(sizes)


def _cert(sizes, weights):
    ids = range(len(sizes))
    return DualCertificate(None, dict(zip(ids, map(F, weights))), dict(zip(ids, map(F, sizes))))


def test_trivial_certificates():
    zero = _cert(["0.3", "0.3"], [0, 0])
    assert check_dual_feasibility(zero) and zero.objective == 0
    assert not check_dual_feasibility(_cert(["0.4", "0.4"], [1, 1]))
    assert check_dual_feasibility(_cert(["0.9"], [1]))


def test_negative_weight_rejected():
    with pytest.raises(CertificateError):
        _cert(["0.5"], [-1])


def test_dp_agrees_with_search():
    rng = random.Random(8)
    for _ in range(80):
        rows = [(F(rng.randint(1, 40), 40), F(rng.randint(0, 30), 30), rng.randint(1, 4))
                for _ in range(rng.randint(1, 8))]
        assert max_bin_weight(rows) == max_bin_weight_dp(rows)


def test_search_refuses_many_pairs():
    sizes = [F(k, 1000) for k in range(1, 80)]
    c = _cert(sizes, sizes)
    with pytest.raises(OracleLimitError):
        check_dual_feasibility(c, pair_limit=60)
    assert check_dual_feasibility(c, method="dp")


def test_weak_duality_small_instances():
    rng = random.Random(21)
    for _ in range(25):
        n = rng.randint(1, 12)
        sizes = [F(rng.randint(1, 20), 20) for _ in range(n)]
        weights = [F(rng.randint(0, 4), 4) for _ in range(n)]
        c = _cert(sizes, weights)
        if check_dual_feasibility(c):
            assert c.objective <= exact_optimal_bins(sizes)


def _pipeline(items, seed=0):
    res = schedule_stream(items, seed=seed)
    packing, audit = rematch_result(res)
    cert = build_dual_certificate(res.schedule.entries, audit)
    return res, packing, audit, cert


def test_case1_weights_equal_sizes():
    res, packing, audit, cert = _pipeline(gen_palette(1500, 2, "small"), 2)
    assert cert.case == 1
    assert all(cert.weights[e.id] == e.size for e in res.schedule.entries)
    assert cert.objective == res.schedule.total_size()
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    assert br.dual_feasible and certify_ratio(br)


def test_hard_input_certified():
    res, packing, audit, cert = _pipeline(gen_hard_input(297))
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    assert cert.case == 1 and br.alg_bins == 427 and br.dual_objective == 297
    assert certify_ratio(br)
    # 11/16 * 427 / 297 against 1, both sides computed exactly
    assert F(11, 16) * 427 / 297 < 1


def test_case4_large_weight():
    items = [Item(i, F(46, 100)) for i in range(200)] + [Item(200 + i, F(6, 10)) for i in range(40)]
    res, packing, audit, cert = _pipeline(items)
    assert cert.case == 4
    assert cert.w == 1 - F(46, 100)
    assert {cert.weights[i] for i in range(200, 240)} == {10 * F(6, 10) / 11 + F(1, 11)} == {F(7, 11)}
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    assert br.dual_feasible and certify_ratio(br)


def test_case3_fixture():
    items = [Item(i, F(26, 100)) for i in range(330)] + [Item(330 + i, F(6, 10)) for i in range(10)]
    res, packing, audit, cert = _pipeline(items)
    assert cert.case == 3
    q = {cert.weights[i] for i in range(330)}
    assert q == {F(5, 16)}
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    assert br.dual_feasible and certify_ratio(br)


def test_ambiguous_case_raises():
    res = schedule_stream(gen_uniform_random(200, 1), seed=1)
    _, audit = rematch_result(res)
    audit.case, audit.case_conflicts = None, ["made up"]
    with pytest.raises(CertificateError, match="made up"):
        build_dual_certificate(res.schedule.entries, audit)


def test_inflated_alg_is_not_certified():
    res, packing, audit, cert = _pipeline(gen_hard_input(297))
    br = bound_report(res.schedule, packing, audit, cert, exact_limit=0)
    fake = BoundReport(2 * br.alg_bins, br.size_lb, br.peak, dual_objective=br.dual_objective,
                       dual_feasible=True, k_decomposition=br.k_decomposition)
    assert not certify_ratio(fake)


def test_infeasible_certificate_never_certifies():
    br = BoundReport(1, 1, dual_objective=F(100), dual_feasible=False)
    assert not certify_ratio(br)


def test_chain_on_small_run():
    res, packing, audit, cert = _pipeline(gen_uniform_random(18, 5), 5)
    br = bound_report(res.schedule, packing, audit, cert)
    assert br.exact_opt is not None
    assert br.chain_violations() == []
    assert br.size_lb <= br.exact_opt <= br.heuristic_ub
    assert br.peak <= br.alg_bins


def test_certificate_table_compresses():
    c = _cert(["0.3", "0.3", "0.6"], ["1/3", "1/3", "1/2"])
    assert c.table() == [(F(6, 10), F(1, 2), 1), (F(3, 10), F(1, 3), 2)]
    d = c.to_json()
    assert d["objective"] == "7/6" and len(d["table"]) == 2
