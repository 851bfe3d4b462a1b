import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from conftest import disjoint_pair, oracle_refs
from sepconf import Waveform, oracle_embed, read_wav, si_sdr, write_emb, write_wav
from sepconf.embedding import EmbeddingField, write_sidecar


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "sepconf.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A mixture, references, and oracle embeddings on disk."""
    root = tmp_path_factory.mktemp("cli")
    mix, refs = disjoint_pair(duration=0.8)
    write_wav(root / "mix.wav", mix, "float32")
    for i, ref in enumerate(refs):
        write_wav(root / f"ref{i}.wav", ref, "float32")
    ref_tfs = oracle_refs(refs)
    for name, sigma in (("clean", 0.05), ("noisy", 0.8)):
        field = oracle_embed(ref_tfs, sigma, seed=3, dim=8)
        write_emb(field, root / f"{name}.emb")
    return root


class TestConfidenceCommand:
    def test_valid_pair_composition(self, workdir):
        proc = run_cli("confidence", workdir / "mix.wav", workdir / "clean.emb",
                       "--seed", "7")
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["degenerate"] is False
        assert payload["confidence"] == pytest.approx(
            payload["silhouette"] * payload["posterior_strength"], abs=1e-12
        )

    def test_byte_identical_reruns(self, workdir):
        args = ("confidence", workdir / "mix.wav", workdir / "clean.emb", "--seed", "7")
        a, b = run_cli(*args), run_cli(*args)
        assert a.stdout == b.stdout
        assert a.returncode == b.returncode == 0

    def test_grid_mismatch_names_both_shapes(self, workdir, tmp_path):
        field = EmbeddingField(np.zeros((100, 257, 8), dtype=np.float32))
        bad = tmp_path / "bad.emb"
        write_emb(field, bad)
        proc = run_cli("confidence", workdir / "mix.wav", bad)
        assert proc.returncode == 1
        assert "100x257x8" in proc.stderr
        assert "257" in proc.stderr and "does not match" in proc.stderr

    def test_degenerate_embedding_exits_two(self, workdir, tmp_path):
        mix, _ = read_wav(workdir / "mix.wav")
        frames = len(mix) // 128 + 1
        flat = EmbeddingField(np.full((frames, 257, 4), 0.5, dtype=np.float32))
        path = tmp_path / "flat.emb"
        write_emb(flat, path)
        proc = run_cli("confidence", workdir / "mix.wav", path)
        assert proc.returncode == 2
        payload = json.loads(proc.stdout)
        assert payload["degenerate"] is True
        assert payload["confidence"] == -1.0

    def test_missing_file_exits_one(self, workdir):
        proc = run_cli("confidence", workdir / "mix.wav", workdir / "nope.emb")
        assert proc.returncode == 1
        assert proc.stderr.strip() != ""
        assert proc.stdout == ""

    def test_sidecar_param_mismatch_exits_one(self, workdir, tmp_path):
        field = oracle_embed(
            oracle_refs([read_wav(workdir / f"ref{i}.wav")[0] for i in range(2)]),
            0.0, seed=1, dim=4,
        )
        path = tmp_path / "sided.emb"
        write_emb(field, path)
        write_sidecar(path, {"window_length": 256, "hop_length": 64})
        proc = run_cli("confidence", workdir / "mix.wav", path)
        assert proc.returncode == 1
        assert "window_length" in proc.stderr
        assert "256" in proc.stderr and "512" in proc.stderr


class TestSeparateCommand:
    def test_writes_sources_that_reconstruct(self, workdir, tmp_path):
        out = tmp_path / "out"
        proc = run_cli("separate", workdir / "mix.wav", workdir / "clean.emb",
                       "--output-dir", out, "--seed", "1")
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert len(payload["sources"]) == 2
        mix, _ = read_wav(workdir / "mix.wav")
        total = sum(read_wav(p)[0].samples for p in payload["sources"])
        err = np.linalg.norm(total - mix.samples) / np.linalg.norm(mix.samples)
        assert err <= 10 ** (-50 / 20)

    def test_deterministic_wav_bytes(self, workdir, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            run_cli("separate", workdir / "mix.wav", workdir / "clean.emb",
                    "--output-dir", out, "--seed", "9")
            outs.append((out / "mix_src0.wav").read_bytes())
        assert outs[0] == outs[1]


class TestSelectCommand:
    def test_picks_clean_candidate(self, workdir, tmp_path):
        proc = run_cli(
            "select", workdir / "mix.wav", workdir / "clean.emb", workdir / "noisy.emb",
            "--output-dir", tmp_path, "--seed", "4",
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["chosen_index"] == 0
        assert len(payload["candidates"]) == 2
        assert (tmp_path / "mix_src0.wav").exists()
        assert (tmp_path / "mix_src1.wav").exists()

    def test_oracle_without_references_exits_one(self, workdir, tmp_path):
        proc = run_cli(
            "select", workdir / "mix.wav", workdir / "clean.emb",
            "--strategy", "oracle", "--output-dir", tmp_path,
        )
        assert proc.returncode == 1
        assert "references" in proc.stderr

    def test_random_strategy_reproducible(self, workdir, tmp_path):
        args = (
            "select", workdir / "mix.wav", workdir / "clean.emb", workdir / "noisy.emb",
            "--strategy", "random", "--seed", "3", "--output-dir", tmp_path,
        )
        a, b = run_cli(*args), run_cli(*args)
        assert a.stdout == b.stdout

    def test_unreadable_candidate_fails_fast(self, workdir, tmp_path):
        proc = run_cli(
            "select", workdir / "mix.wav", workdir / "clean.emb", tmp_path / "gone.emb",
            "--output-dir", tmp_path,
        )
        assert proc.returncode == 1

    def test_all_degenerate_exits_two(self, workdir, tmp_path):
        mix, _ = read_wav(workdir / "mix.wav")
        frames = len(mix) // 128 + 1
        flat = EmbeddingField(np.full((frames, 257, 4), 0.5, dtype=np.float32))
        path = tmp_path / "flat.emb"
        write_emb(flat, path)
        proc = run_cli(
            "select", workdir / "mix.wav", path, "--output-dir", tmp_path
        )
        assert proc.returncode == 2
        payload = json.loads(proc.stdout)
        assert payload["all_degenerate"] is True
        assert payload["chosen_index"] == 0


class TestEvaluateCommand:
    def test_identity_prints_cap(self, workdir):
        proc = run_cli(
            "evaluate", "--estimates", workdir / "ref0.wav", workdir / "ref1.wav",
            "--references", workdir / "ref0.wav", workdir / "ref1.wav",
        )
        assert proc.returncode == 0
        payload = json.loads(proc.stdout)
        assert payload["per_source_sdr"] == [100.0, 100.0]
        assert payload["mean_sdr"] == 100.0

    def test_swap_resolved(self, workdir):
        proc = run_cli(
            "evaluate", "--estimates", workdir / "ref1.wav", workdir / "ref0.wav",
            "--references", workdir / "ref0.wav", workdir / "ref1.wav",
        )
        payload = json.loads(proc.stdout)
        assert payload["permutation"] == [1, 0]


class TestEmbedOracleCommand:
    def test_export_then_score(self, workdir, tmp_path):
        out = tmp_path / "oracle.emb"
        proc = run_cli(
            "embed-oracle", "--references", workdir / "ref0.wav", workdir / "ref1.wav",
            "--output", out, "--noise-sigma", "0.0", "--dim", "6",
        )
        assert proc.returncode == 0, proc.stderr
        sidecar = json.loads((tmp_path / "oracle.emb.json").read_text())
        assert sidecar["window_length"] == 512
        assert sidecar["dim"] == 6
        score = run_cli("confidence", workdir / "mix.wav", out)
        assert score.returncode == 0
        assert json.loads(score.stdout)["confidence"] >= 0.98

    def test_deterministic_bytes(self, workdir, tmp_path):
        paths = []
        for name in ("a.emb", "b.emb"):
            out = tmp_path / name
            run_cli(
                "embed-oracle", "--references", workdir / "ref0.wav",
                workdir / "ref1.wav", "--output", out,
                "--noise-sigma", "0.4", "--seed", "5",
            )
            paths.append(out.read_bytes())
        assert paths[0] == paths[1]


class TestBenchCommands:
    def test_correlation_csv_reproducible(self, tmp_path):
        csvs = []
        for name in ("r1.csv", "r2.csv"):
            out = tmp_path / name
            proc = run_cli(
                "bench", "correlation", "--trials", "1", "--sigmas", "0,0.5",
                "--master-seed", "1", "--duration", "1.0", "--dim", "4",
                "--output", out,
            )
            assert proc.returncode == 0, proc.stderr
            payload = json.loads(proc.stdout)
            assert "pearson_r" in payload
            csvs.append(out.read_text())
        assert csvs[0] == csvs[1]
        assert csvs[0].splitlines()[0] == (
            "sigma,trial,confidence,silhouette,posterior_strength,mean_sdr"
        )

    def test_ensemble_summary(self, tmp_path):
        out = tmp_path / "ens.csv"
        proc = run_cli(
            "bench", "ensemble", "--trials-per-domain", "1", "--master-seed", "2",
            "--duration", "1.0", "--dim", "4", "--output", out,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert "selection" in payload and "mean_sdr" in payload
        assert out.exists()

    def test_config_file_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"duration": 1.0, "snr_range": [0.0, 0.0]}))
        proc = run_cli(
            "bench", "correlation", "--trials", "1", "--sigmas", "0",
            "--config", cfg,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.startswith("sigma,")
