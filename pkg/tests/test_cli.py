from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from stackelberg_lab import cli
from stackelberg_lab.games import Transcript
from stackelberg_lab.geometry import simplex_product


@pytest.fixture(autouse=True)
def _no_output_dirs(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(cli, "ensure_directories", lambda: None)


def _separation_files(tmp_path: Path) -> tuple[Path, Path]:
    game_path = tmp_path / "separation.json"
    assert cli.main(["generate", "--name", "separation", "--params", '{"T": 8}', "--out", str(game_path)]) == 0
    config_path = tmp_path / "separation_match.json"
    config_path.write_text(
        json.dumps(
            {
                "game": {"name": "separation"},
                "learner": {"name": "scripted"},
                "optimizer": {"name": "replay"},
                "T": 8,
            }
        ),
        encoding="utf-8",
    )
    transcript_path = tmp_path / "separation.csv"
    assert cli.main(["simulate", "--config", str(config_path), "--out", str(transcript_path)]) == 0
    return game_path, transcript_path


def test_generate_writes_game_and_schedule(tmp_path: Path) -> None:
    game_path, _ = _separation_files(tmp_path)
    assert json.loads(game_path.read_text(encoding="utf-8"))["type"] == "polytope"
    schedule = pd.read_csv(tmp_path / "separation_schedule.csv")
    assert list(schedule["t"]) == list(range(1, 9))


def test_regret_audits_a_simulated_transcript(tmp_path: Path) -> None:
    game_path, transcript_path = _separation_files(tmp_path)
    report_path = tmp_path / "regret.json"
    code = cli.main(
        [
            "regret",
            "--transcript",
            str(transcript_path),
            "--polytope",
            str(game_path),
            "--notion",
            "polytope_swap",
            "--out",
            str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["value"] == pytest.approx(4.0, abs=1e-8)


def test_solve_benchmarks(tmp_path: Path) -> None:
    game_path = tmp_path / "selling.json"
    assert cli.main(["generate", "--name", "selling", "--out", str(game_path)]) == 0
    out = tmp_path / "perconval.json"
    assert cli.main(["solve", "--benchmark", "perconval", "--game", str(game_path), "--out", str(out)]) == 0
    assert json.loads(out.read_text(encoding="utf-8"))["value"] == pytest.approx(0.375, abs=1e-9)
    out = tmp_path / "stackelberg.json"
    assert cli.main(["solve", "--benchmark", "stackelberg", "--game", str(game_path), "--out", str(out)]) == 0
    assert json.loads(out.read_text(encoding="utf-8"))["value"] == pytest.approx(0.25, abs=1e-9)


def test_lab_errors_exit_with_code_two(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    game_path, _ = _separation_files(tmp_path)
    capsys.readouterr()
    assert cli.main(["solve", "--benchmark", "corrval", "--game", str(game_path)]) == 2
    assert "shape-error:" in capsys.readouterr().err


def test_reproduce_single_case(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["reproduce", "--case", "C6-edge-graph", "--report-dir", str(tmp_path)]) == 0
    assert "C6-edge-graph" in capsys.readouterr().out
    assert (tmp_path / "C6-edge-graph.json").exists()


def test_generate_dominating_set_from_an_edge_list(tmp_path: Path) -> None:
    edges = tmp_path / "path3.txt"
    edges.write_text("3\n1 2\n2 3\n", encoding="utf-8")
    game_path = tmp_path / "path3.json"
    code = cli.main(["generate", "--name", "dominating_set", "--graph", str(edges), "--out", str(game_path)])
    assert code == 0
    payload = json.loads(game_path.read_text(encoding="utf-8"))
    assert payload["type"] == "bayesian"
    assert len(payload["p"]) == 6
    assert len(payload["u_O"]) == 4


def test_generate_rejects_a_graph_for_other_games(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    edges = tmp_path / "edge.txt"
    edges.write_text("2\n1 2\n", encoding="utf-8")
    assert cli.main(["generate", "--name", "selling", "--graph", str(edges), "--out", str(tmp_path / "g.json")]) == 2
    assert "unknown-component:" in capsys.readouterr().err


def _contextual_files(tmp_path: Path) -> tuple[Path, Path]:
    polytope_path = tmp_path / "delta22.json"
    polytope_path.write_text(json.dumps(simplex_product(2, 2).to_dict()), encoding="utf-8")
    T = 4
    x = np.tile([1.0, 0.0, 1.0, 0.0], (T, 1))
    r = np.tile([0.0, 0.5, 0.0, 0.5], (T, 1))
    transcript = Transcript(
        q_weights=np.ones((T, 1)), x=x, r=r, u_O=np.zeros(T), u_L=np.einsum("td,td->t", r, x)
    )
    transcript_path = tmp_path / "contextual.csv"
    transcript.write_csv(transcript_path)
    return polytope_path, transcript_path


def test_regret_diagnostics_report_every_contextual_notion(tmp_path: Path) -> None:
    polytope_path, transcript_path = _contextual_files(tmp_path)
    out = tmp_path / "diagnostics.json"
    args = ["regret", "--transcript", str(transcript_path), "--polytope", str(polytope_path)]
    assert cli.main(args + ["--diagnostics", "--p", "[0.5, 0.5]", "--out", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["per_context_swap"] == pytest.approx([4.0, 4.0])
    assert report["weighted_swap"] == pytest.approx(4.0)
    assert report["linear_swap"]["value"] == pytest.approx(4.0, abs=1e-7)
    assert report["polytope_swap"]["value"] == pytest.approx(4.0, abs=1e-7)
    assert report["integral_linear_swap"]["value"] == pytest.approx(4.0, abs=1e-9)
    assert report["integral_linear_swap"]["witness"]["mapping"][0] == 3


def test_regret_diagnostics_need_context_weights(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    polytope_path, transcript_path = _contextual_files(tmp_path)
    args = ["regret", "--transcript", str(transcript_path), "--polytope", str(polytope_path), "--diagnostics"]
    assert cli.main(args) == 2
    assert "shape-error:" in capsys.readouterr().err
