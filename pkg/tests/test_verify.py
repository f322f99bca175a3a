from dtdstc.dtacmo import perturbed_p_update
from dtdstc.verify import SUITES, run_suites


def test_all_suites_pass():
    results = run_suites()
    assert [r.name for r in results] == list(SUITES)
    failed = [r.line() for r in results if not r.passed]
    assert not failed, failed


def test_perturbed_p_update_is_caught():
    with perturbed_p_update(1e-7):
        (res,) = run_suites(["rls_batch_equivalence"])
    assert not res.passed and res.measured > 1e-8


def test_crashing_suite_is_reported(monkeypatch):
    import dtdstc.verify as v

    def broken():
        raise RuntimeError("boom")
    monkeypatch.setitem(v.SUITES, "delay_matrix_algebra", broken)
    (res,) = run_suites(["delay_matrix_algebra"])
    assert not res.passed and "boom" in res.detail
