import json
import runpy
import sys
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_and_backends_agree(tmp_path, monkeypatch, capsys):
    out = tmp_path / "bench.json"
    monkeypatch.setattr(sys, "argv", [str(BENCH), "--repeat", "1", "--json", str(out)])
    main = runpy.run_path(str(BENCH))["main"]
    assert main() == 0
    rows = json.loads(out.read_text())["rows"]
    assert len(rows) == 4 and all(r["agree"] for r in rows)
    assert "speedup" in capsys.readouterr().out
