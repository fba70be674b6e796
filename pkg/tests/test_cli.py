import json

import pytest

from mtlens.cli import main

from conftest import DATA_DIR


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(path, text):
    path.write_text(text, encoding="utf-8")


def test_bleu_identity(tmp_path, capsys):
    ref = tmp_path / "ref.txt"
    write(ref, "the cat sat on the mat\nrain falls on green hills\n")
    code, out, _ = run_cli(capsys, "bleu", str(ref), str(ref))
    assert code == 0
    payload = json.loads(out)
    assert payload["score"] == pytest.approx(100.0, abs=1e-9)
    assert payload["bp"] == 1.0


def test_missing_file_is_data_error(tmp_path, capsys):
    ref = tmp_path / "ref.txt"
    write(ref, "a b\n")
    code, out, err = run_cli(capsys, "ter", str(tmp_path / "missing.txt"), str(ref))
    assert code == 2
    assert out == ""
    assert "missing.txt" in err


def test_unknown_subcommand_usage_error(capsys):
    code, _, _ = run_cli(capsys, "frobnicate")
    assert code == 1


def test_help_exits_zero(capsys):
    code, _, _ = run_cli(capsys, "--help")
    assert code == 0


def test_perturb_requires_seed(tmp_path, capsys):
    f = tmp_path / "in.txt"
    write(f, "a b\n")
    code, _, _ = run_cli(
        capsys, "perturb", "--kind", "misspelling", "--prob", "0.1",
        str(f), str(tmp_path / "out.txt"),
    )
    assert code == 1


def test_perturb_replay_identical(tmp_path, capsys):
    f = tmp_path / "in.txt"
    write(f, "alpha beta gamma delta\nepsilon zeta eta theta\n")
    out1 = tmp_path / "out1.txt"
    out2 = tmp_path / "out2.txt"
    for out in (out1, out2):
        code, _, _ = run_cli(
            capsys, "perturb", "--kind", "misspelling", "--prob", "0.5",
            "--seed", "7", str(f), str(out),
        )
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_perturb_case_alias(tmp_path, capsys):
    f = tmp_path / "in.txt"
    write(f, "Mixed Case line\n")
    code, _, _ = run_cli(
        capsys, "perturb", "--kind", "case", "--prob", "1.0", "--seed", "3",
        str(f), str(tmp_path / "out.txt"),
    )
    assert code == 0


def test_ter_json(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    write(hyp, "a b c\n")
    write(ref, "a c\n")
    code, out, _ = run_cli(capsys, "ter", str(hyp), str(ref), "--per-sentence")
    assert code == 0
    payload = json.loads(out)
    assert payload["mean_ter"] == pytest.approx(0.5)
    assert payload["sentences"][0]["edits"] == 1


def test_align_and_frs_pipeline(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    other = tmp_path / "other.txt"
    write(hyp, "a b c\na d e\nb d f\nc e f\n")
    write(other, "x y z\nx q w\ny q v\nz w v\n")
    aln = tmp_path / "out.aln"
    code, out, _ = run_cli(capsys, "align", str(hyp), str(other), "--iters", "8",
                           "--out", str(aln))
    assert code == 0
    assert aln.exists()
    code, out, _ = run_cli(capsys, "frs", str(hyp), str(other), "--align", str(aln))
    assert code == 0
    payload = json.loads(out)
    assert payload["count"] == 4
    assert 0.0 <= payload["mean_frs"] <= 1.0


def test_rmss_cli(tmp_path, capsys):
    emb = tmp_path / "x.emb"
    write(emb, "2 2\n1 0\n0 1\n")
    code, out, _ = run_cli(capsys, "rmss", "--k", "1", str(emb), str(emb))
    assert code == 0
    payload = json.loads(out)
    assert payload["mean"] == pytest.approx(1.0)
    assert payload["skipped"] == 0


def test_lrp_cli(tmp_path, capsys):
    src = tmp_path / "src.txt"
    tgt = tmp_path / "tgt.txt"
    write(src, "ka ke\n")
    write(tgt, "ra re\n")
    code, out, _ = run_cli(
        capsys, "lrp",
        "--model", str(DATA_DIR / "fixture.wts"),
        "--vocab", str(DATA_DIR / "vocab.txt"),
        str(src), str(tgt),
    )
    assert code == 0
    lines = out.strip().splitlines()
    records = [json.loads(l) for l in lines]
    assert "summary" in records[-1]
    steps = records[:-1]
    assert len(steps) == 2
    assert steps[0]["step"] == 1
    assert steps[0]["r_source"] == pytest.approx(1.0, abs=1e-6)
    assert steps[0]["target_rel"] == []
    total = steps[1]["r_source"] + steps[1]["r_target"]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_robust_cli_csv(tmp_path, capsys):
    def make_run(dirname, hyp_lines):
        d = tmp_path / dirname
        (d / "checkpoints" / "c1").mkdir(parents=True)
        write(d / "src.txt", "s one two\ns three four\n")
        write(d / "ref.txt", "the cat sat on the mat\nrain falls on green hills\n")
        write(d / "checkpoints" / "c1" / "hyp.txt", "\n".join(hyp_lines) + "\n")
        return d

    clean = make_run("clean", ["the cat sat on the mat", "rain falls on green hills"])
    pert = make_run("pert", ["the cat sat on a mat", "rain falls on green hills"])
    code, out, _ = run_cli(
        capsys, "robust", "--clean", str(clean),
        "--perturbed", f"misspelling={pert}",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "checkpoint,kind,bleu_clean,bleu_pert,R,R_raw,C"
    fields = lines[1].split(",")
    assert fields[0] == "c1"
    assert fields[1] == "misspelling"
    assert float(fields[2]) == pytest.approx(100.0)
    assert 0.0 <= float(fields[4]) <= 1.0


def test_report_cli_full_fixture(tmp_path, capsys):
    csv_path = tmp_path / "series.csv"
    svg_path = tmp_path / "series.svg"
    code, out, _ = run_cli(
        capsys, "report", str(DATA_DIR / "run3"),
        "--metrics", "bleu,frs-vs-ref,ter-vs-ref,rmss-vs-ref,avg-src-contribution",
        "--csv", str(csv_path), "--svg", str(svg_path),
        "--embeddings", str(DATA_DIR / "emb3"),
        "--model", str(DATA_DIR / "fixture.wts"),
        "--vocab", str(DATA_DIR / "vocab.txt"),
        "--iters", "5", "--k", "2", "--threads", "1",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["notes"] == []
    assert csv_path.exists() and svg_path.exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("checkpoint,bleu,")
    assert len(lines) == 4  # header + 3 checkpoints


def test_threads_validation(capsys):
    code, _, _ = run_cli(capsys, "report", "somewhere", "--threads", "0")
    assert code == 1


def test_format_text_headline(tmp_path, capsys):
    ref = tmp_path / "ref.txt"
    write(ref, "a b c d e\n")
    code, out, _ = run_cli(capsys, "bleu", str(ref), str(ref), "--format", "text")
    assert code == 0
    assert float(out.strip()) == pytest.approx(100.0)


def test_numeric_failure_exit_code(tmp_path, capsys):
    import warnings

    import numpy as np

    from mtlens.transformer import init_model, save_model

    m = init_model(layers=1, heads=1, dim=4, ffn=8, vocab_size=8, seed=0)
    m.weights["embedding"] = m.weights["embedding"] * 1e200  # overflow bait
    wts = tmp_path / "hot.wts"
    save_model(m, wts)
    vocab = tmp_path / "v.txt"
    write(vocab, "<bos>\n<eos>\n<unk>\n<pad>\nka\nra\n")
    src = tmp_path / "s.txt"
    tgt = tmp_path / "t.txt"
    write(src, "ka\n")
    write(tgt, "ra\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code, out, err = run_cli(
            capsys, "lrp", "--model", str(wts), "--vocab", str(vocab),
            str(src), str(tgt),
        )
    assert code == 3
    assert "non-finite" in err
