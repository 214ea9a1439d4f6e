import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from relay_energy.cgras import Cgras, Vertex, enumerate_closed_sets, maximal_edges, scheme_to_dict
from relay_energy.cli import main
from relay_energy.model import load_config

from helpers import full_allocation, nonempty_subsets

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def p2p_doc(rate=1.0):
    return {"n_relays": 1, "n_receivers": 1, "relay_gains": [1.0], "access_gains": [[1.0]],
            "target_rates": [rate]}


def p2p_scheme():
    return {"allocation": [[0]], "vertices": [{"encoders": [0], "decoders": [0]}],
            "edges": [], "gamma": [[1.0]]}


def test_evaluate_feasible(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", p2p_doc())
    sch = write(tmp_path, "s.json", p2p_scheme())
    mix = write(tmp_path, "a.json", {"entries": [[{"re": math.sqrt(3), "im": 0}]]})
    code = main(["evaluate", "--config", cfg, "--scheme", sch, "--mixing", mix, "--format", "csv"])
    out = capsys.readouterr()
    assert code == 0
    assert "feasible" in out.err
    rows = list(csv.reader(out.out.splitlines()))
    assert rows[0] == ["receiver", "closed_set_id", "member_vertices", "bound_bits"]
    assert len(rows) == 2 and float(rows[1][3]) == pytest.approx(1.0)


def test_evaluate_infeasible(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", p2p_doc(rate=2.0))
    sch = write(tmp_path, "s.json", p2p_scheme())
    mix = write(tmp_path, "a.json", {"entries": [[math.sqrt(3)]]})
    assert main(["evaluate", "--config", cfg, "--scheme", sch, "--mixing", mix]) == 2
    assert "infeasible" in capsys.readouterr().err


def test_evaluate_optimises_when_no_mixing(tmp_path):
    cfg = write(tmp_path, "c.json", p2p_doc())
    out = tmp_path / "out"
    assert main(["evaluate", "--config", cfg, "--canonical", "0", "--out-dir", str(out)]) == 0
    doc = json.loads((out / "evaluation.json").read_text())
    assert doc["feasible"] and doc["row_powers"][0] == pytest.approx(3.0, abs=1e-6)


def test_evaluate_constraint_rows_match_closed_sets(tmp_path):
    verts = tuple(Vertex(e, d) for e in nonempty_subsets(2) for d in nonempty_subsets(3))
    gamma = np.zeros((3, len(verts)))
    for z in range(3):
        gamma[z, verts.index(Vertex({0, 1}, {z}))] = 1.0
    scheme = Cgras(full_allocation(2, 3), verts, maximal_edges(verts), gamma)
    sch = write(tmp_path, "s.json", scheme_to_dict(scheme))
    cfg = str(CONFIGS / "two_relay_three_rx.json")
    rng = np.random.default_rng(0)
    entries = [[{"re": float(rng.normal()), "im": float(rng.normal())} if j in v.encoders else 0.0
                for v in verts] for j in range(2)]
    mix = write(tmp_path, "a.json", {"entries": entries})
    out = tmp_path / "out"
    main(["evaluate", "--config", cfg, "--scheme", sch, "--mixing", mix, "--out-dir", str(out)])
    rows = (out / "constraints.csv").read_text().strip().splitlines()
    assert len(rows) - 1 == sum(len(enumerate_closed_sets(scheme, z)) for z in range(3))


def test_evaluate_rejects_bad_support(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {**p2p_doc(), "n_relays": 2, "relay_gains": [1, 1],
                                     "access_gains": [[1, 1]]})
    sch = write(tmp_path, "s.json", {"allocation": [[0], []],
                                     "vertices": [{"encoders": [0], "decoders": [0]}],
                                     "edges": [], "gamma": [[1.0]]})
    mix = write(tmp_path, "a.json", [[1.0], [1.0]])
    assert main(["evaluate", "--config", cfg, "--scheme", sch, "--mixing", mix]) == 1
    assert "outside encoder sets" in capsys.readouterr().err


def test_evaluate_rejects_invalid_scheme(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", p2p_doc())
    bad = p2p_scheme()
    bad["gamma"] = [[0.5]]
    sch = write(tmp_path, "s.json", bad)
    assert main(["evaluate", "--config", cfg, "--scheme", sch]) == 1
    assert "sums to" in capsys.readouterr().err


def test_bad_config_reports_field(tmp_path, capsys):
    doc = p2p_doc()
    doc["relay_gains"] = [0.0]
    cfg = write(tmp_path, "c.json", doc)
    assert main(["bound", "--config", cfg]) == 1
    assert "c.json:relay_gains[0]" in capsys.readouterr().err


def test_optimize_point_to_point(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(CONFIGS / "p2p.json"), "--out-dir", str(out)]) == 0
    line = capsys.readouterr().out
    assert "best: 6.0" in line or "best: 5.99999" in line
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["global_best"]["total_power"] == pytest.approx(6.0, abs=1e-6)
    assert doc["lower_bound"]["value"] == pytest.approx(6.0, abs=1e-6)
    assert load_config(doc["config"]) == load_config(CONFIGS / "p2p.json")


def test_optimize_symmetric_pair(tmp_path, capsys):
    out = tmp_path / "o"
    main(["optimize", "--config", str(CONFIGS / "coop2x1.json"), "--out-dir", str(out),
          "--emit-dag", "--format", "json"])
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["global_best"]["total_power"] == pytest.approx(6.0, abs=1e-6)
    assert doc["global_best"]["allocation_bitmask"] == "1/0"
    assert not (out / "sweep.csv").exists()
    assert (out / "best_scheme.dot").read_text().startswith("digraph")


def test_optimize_deterministic(tmp_path):
    cfg = str(CONFIGS / "coop2x1.json")
    for d in ("a", "b"):
        main(["optimize", "--config", cfg, "--out-dir", str(tmp_path / d), "--seed", "3"])
    for name in ("sweep.json", "sweep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_enumerate(tmp_path, capsys):
    assert main(["enumerate", "--config", str(CONFIGS / "coop2x1.json"), "--allocations"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    main(["enumerate", "--config", str(CONFIGS / "coop2x1.json"), "--schemes", "2", "--emit-dag"])
    assert "v0 [encoders={0,1} decoders={0}" in capsys.readouterr().out


def test_bound_command(capsys):
    assert main(["bound", "--config", str(CONFIGS / "coop2x1.json")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == pytest.approx(6.0, abs=1e-6)


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "relay_energy", "enumerate", "--config",
                          str(CONFIGS / "p2p.json")], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("0\t1\t")
