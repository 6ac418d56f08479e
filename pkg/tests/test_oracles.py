import pytest

from app.engine.expand import BCH_WORDS
from app.engine.oracles import bch_suite, fermion_suite, magnus_suite, run_oracles, trace_suite
from app.errors import ResourceLimitError, ValidationError


def flipped(word):
    return [(d, w, -c if w == word else c) for d, w, c in BCH_WORDS]


class TestSuites:

    def test_trace_suite_passes(self):
        results = trace_suite(qubits=3, trials=5)
        assert [r.name for r in results] == ["trace_product", "commutator", "jacobi", "associativity"]
        assert all(r.passed for r in results)

    def test_bch_suite_passes(self):
        results = bch_suite()
        assert all(r.passed for r in results), [r.detail for r in results]
        for r in results:
            order = int(r.name.removeprefix("order"))
            assert r.metrics["slope"] == pytest.approx(order + 1, abs=0.3)

    def test_bch_fault_is_localized(self):
        results = {r.name: r for r in bch_suite(orders=(3, 4), words=flipped("YXXY"))}
        assert results["order3"].passed
        assert not results["order4"].passed
        assert "YXXY" in results["order4"].detail

    def test_magnus_suite_passes(self):
        results = magnus_suite()
        assert len(results) == 3
        assert all(r.passed for r in results), [r.detail for r in results]

    def test_fermion_suite_passes(self):
        (result,) = fermion_suite()
        assert result.passed
        assert result.metrics["difference"] < 1e-8


class TestRunOracles:

    def test_selected_suites(self):
        results = run_oracles(["trace"], qubits=3)
        assert {r.suite for r in results} == {"trace"}
        assert results[0].to_dict()["suite"] == "trace"

    def test_unknown_suite(self):
        with pytest.raises(ValidationError) as info:
            run_oracles(["lanczos"])
        assert info.value.context["unknown"] == ["lanczos"]

    def test_dense_cap(self):
        with pytest.raises(ResourceLimitError):
            run_oracles(["trace"], qubits=13)
