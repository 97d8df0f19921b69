#!/usr/bin/env python3
"""End-to-end checks of the grapeqa command line.

usage: cli_test.py <grapeqa binary> <source dir>
"""

import hashlib
import json
import re
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

CLI = sys.argv[1]
SRC = Path(sys.argv[2])
FIX = SRC / "data" / "fixture"
FIXTURE = ["--kg", str(FIX / "kg.jsonl"), "--data", str(FIX / "dataset.jsonl")]
LEXICON = ["--lexicon", str(FIX / "lexicon.jsonl")]

failures = []


def run(*args, expect=0):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=300)
    if p.returncode != expect:
        raise AssertionError(
            f"{' '.join(map(str, args))}: exit {p.returncode}, wanted {expect}\nstdout: {p.stdout}\nstderr: {p.stderr}"
        )
    return p


def error_of(p):
    last = p.stderr.strip().splitlines()[-1]
    return json.loads(last)


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def case(fn):
    try:
        fn()
        print(f"ok   {fn.__name__}")
    except Exception as e:  # noqa: BLE001
        failures.append(fn.__name__)
        print(f"FAIL {fn.__name__}: {e}")
    return fn


tmp = Path(tempfile.mkdtemp(prefix="grapeqa_cli_"))


@case
def usage_errors():
    for args in (
        [],
        ["frobnicate"],
        ["build-wg", *FIXTURE],
        ["train", *FIXTURE, "--out", tmp / "x", "--layers", "0"],
        ["stats", *FIXTURE, "--pega"],
        ["stats", *FIXTURE, "--pega", "--chunker", "random:2"],
        ["stats", *FIXTURE, "--pega", "--chunker", "bogus", *LEXICON],
        ["stats", FIX / "kg.jsonl", *FIXTURE],
        ["stats", *FIXTURE, "--threshold", "1.5"],
    ):
        err = error_of(run(*args, expect=2))
        assert err["error"] == "usage" and err["message"], err


@case
def data_errors():
    bad = tmp / "bad.jsonl"
    bad.write_text('{"id": "x", "question": "q ?", "options": ["a"], "answer_idx": 0}\n')
    empty = tmp / "empty.jsonl"
    empty.write_text("")
    broken = tmp / "broken.jsonl"
    broken.write_text("{not json\n")
    for args in (
        ["stats", "--kg", tmp / "missing.jsonl", "--data", FIX / "dataset.jsonl"],
        ["stats", "--kg", FIX / "kg.jsonl", "--data", bad],
        ["stats", "--kg", FIX / "kg.jsonl", "--data", empty],
        ["stats", "--kg", FIX / "kg.jsonl", "--data", broken],
        ["stats", "--kg", broken, "--data", FIX / "dataset.jsonl"],
        ["stats", empty],
        ["stats", broken],
        ["eval", *FIXTURE, "--checkpoint", broken],
        ["stats", *FIXTURE, "--embeddings", empty],
    ):
        err = error_of(run(*args, expect=1))
        assert err["error"] == "data", err


@case
def build_wg_and_stats():
    out1, out2 = tmp / "wg1", tmp / "wg2"
    for d in (out1, out2):
        p = run("build-wg", *FIXTURE, "--pega", "--canp", *LEXICON, "--out", d)
        assert json.loads(p.stdout)["files"] == 80
    files = sorted(f.name for f in out1.iterdir())
    assert len(files) == 80, len(files)
    assert files == sorted(f.name for f in out2.iterdir())
    for f in files:
        assert digest(out1 / f) == digest(out2 / f), f
        stages = [json.loads(line)["stage"] for line in (out1 / f).read_text().splitlines()]
        assert stages == ["raw", "pega", "canp"], stages

    expected = json.loads((FIX / "expected_stats.json").read_text())
    from_files = json.loads(run("stats", out1).stdout)
    assert from_files["stage"] == "canp"
    assert from_files["stages"]["raw"] == expected["raw"]
    assert from_files["stages"]["pega"] == expected["pega"]

    direct = json.loads(run("stats", *FIXTURE, "--pega", *LEXICON).stdout)
    assert direct["stage"] == "pega"
    assert {k: v for k, v in direct.items() if k not in ("stage", "stages")} == expected["pega"]
    assert direct["stages"]["raw"] == expected["raw"]


@case
def canp_without_pega():
    out = json.loads(run("stats", *FIXTURE, "--canp").stdout)
    assert out["stage"] == "canp"
    assert set(out["stages"]) == {"raw", "canp"}
    assert out["total_nodes"]["noun_chunk"] == 0


@case
def random_chunker():
    a = run("stats", *FIXTURE, "--pega", "--chunker", "random:0.2", "--embed-seed", "3").stdout
    b = run("stats", *FIXTURE, "--pega", "--chunker", "random:0.2", "--embed-seed", "3").stdout
    assert a == b
    assert json.loads(a)["total_nodes"]["noun_chunk"] > 0


@case
def external_chunks():
    rows = [json.loads(line) for line in (FIX / "dataset.jsonl").read_text().splitlines() if line.strip()]
    table = tmp / "chunks.jsonl"
    with table.open("w") as f:
        for ex in rows:
            for o, opt in enumerate(ex["options"]):
                start = len(ex["question"].encode()) + 1
                chunks = [{"text": opt, "start": start, "end": start + len(opt.encode())}]
                f.write(json.dumps({"example_id": ex["id"], "option_idx": o, "chunks": chunks}) + "\n")
    out = json.loads(run("stats", *FIXTURE, "--pega", "--chunker", f"external:{table}").stdout)
    assert out["total_nodes"]["noun_chunk"] == 80, out["total_nodes"]

    partial = tmp / "partial.jsonl"
    partial.write_text("\n".join(table.read_text().splitlines()[:-1]) + "\n")
    err = error_of(run("stats", *FIXTURE, "--pega", "--chunker", f"external:{partial}", expect=1))
    assert "no entry" in err["message"], err

    beyond = tmp / "beyond.jsonl"
    beyond.write_text(
        json.dumps({"example_id": rows[0]["id"], "option_idx": 0, "chunks": [{"text": "x", "start": 0, "end": 9999}]})
        + "\n"
    )
    run("stats", *FIXTURE, "--pega", "--chunker", f"external:{beyond}", expect=1)


def synth(task, **kw):
    out = tmp / f"synth_{task}_{kw.get('seed', 0)}"
    args = ["synth", "--task", task, "--out", out]
    for k, v in kw.items():
        args += [f"--{k}", v]
    run(*args)
    return out


SMALL = ["--dim", "16", "--hash-dim", "16", "--d-rho", "4", "--batch", "16", "--lr-gnn", "3e-3"]


@case
def train_eval_and_determinism():
    d = synth("path", train=60, test=20, seed=5)
    common = ["--kg", d / "kg.jsonl", "--data", d / "train.jsonl", "--dev", d / "test.jsonl"]
    for layers in (4, 5, 6):
        run("train", *common, *SMALL, "--epochs", "1", "--layers", layers, "--out", tmp / f"l{layers}")
    a, b = tmp / "run_a", tmp / "run_b"
    summaries = []
    for out in (a, b):
        p = run("train", *common, *SMALL, "--epochs", "3", "--layers", "2", "--seed", "7", "--out", out, "--json")
        summaries.append(json.loads(p.stdout))
    assert digest(a / "metrics.jsonl") == digest(b / "metrics.jsonl")
    assert digest(a / "model.gqa") == digest(b / "model.gqa")
    lines = [json.loads(x) for x in (a / "metrics.jsonl").read_text().splitlines()]
    assert [m["epoch"] for m in lines] == [1, 2, 3]
    assert all(set(m) == {"epoch", "train_loss", "train_acc", "dev_acc"} for m in lines)

    ev = json.loads(
        run("eval", "--kg", d / "kg.jsonl", "--data", d / "test.jsonl", "--hash-dim", "16", "--checkpoint",
            a / "model.gqa", "--json").stdout
    )
    assert ev["accuracy"] == lines[-1]["dev_acc"] == summaries[0]["dev_acc"], (ev["accuracy"], lines[-1])
    assert ev["examples"] == 20 and len(ev["predictions"]) == 20
    human = run("eval", "--kg", d / "kg.jsonl", "--data", d / "test.jsonl", "--hash-dim", "16", "--checkpoint",
                a / "model.gqa").stdout
    assert re.fullmatch(r"accuracy \d\.\d{4} \(\d+/20\)\n", human), human

    # feature size mismatch between checkpoint and provider
    run("eval", "--kg", d / "kg.jsonl", "--data", d / "test.jsonl", "--hash-dim", "32", "--checkpoint",
        a / "model.gqa", expect=1)
    other = tmp / "run_c"
    run("train", *common, *SMALL, "--epochs", "3", "--layers", "2", "--seed", "8", "--out", other)
    assert digest(a / "metrics.jsonl") != digest(other / "metrics.jsonl")


@case
def embeddings_file():
    # tiny corpus; the file is grown from the provider's own "no embedding" errors
    kg = tmp / "emb_kg.jsonl"
    kg.write_text(
        "\n".join(
            json.dumps(t)
            for t in (
                {"subj": "cat", "rel": "IsA", "obj": "animal"},
                {"subj": "dog", "rel": "IsA", "obj": "animal"},
                {"subj": "cat", "rel": "AtLocation", "obj": "house"},
            )
        )
        + "\n"
    )
    data = tmp / "emb_data.jsonl"
    data.write_text(
        json.dumps({"id": "e0", "question": "where does a cat sleep ?", "options": ["house", "dog"], "answer_idx": 0})
        + "\n"
        + json.dumps({"id": "e1", "question": "a dog is an ?", "options": ["cat", "animal"], "answer_idx": 1})
        + "\n"
    )
    lex = tmp / "emb_lex.jsonl"
    lex.write_text(
        "\n".join(json.dumps({"token": w, "pos": p}) for w, p in (("a", "DET"), ("cat", "NOUN"), ("dog", "NOUN")))
        + "\n"
    )
    emb = tmp / "emb.jsonl"
    keys = {}

    def write():
        with emb.open("w") as f:
            for k, v in keys.items():
                f.write(json.dumps({"key": k, "vector": v}) + "\n")

    keys["seed"] = [0.5, -0.25, 0.125, 1.0]
    args = ["--kg", kg, "--data", data, "--embeddings", emb, "--pega", "--lexicon", lex, "--d-rho", "3"]
    for step in range(400):
        write()
        p = subprocess.run([CLI, "stats", *map(str, args)], capture_output=True, text=True)
        if p.returncode == 0:
            break
        err = error_of(p)
        m = re.search(r'no embedding for text "(.*)"', err["message"])
        assert m, err
        n = len(keys)
        keys[m.group(1)] = [((n * 7 + i * 3) % 11 - 5) / 10 for i in range(4)]
    else:
        raise AssertionError("embedding keys never converged")
    assert "where does a cat sleep ? house" in keys
    stats = json.loads(p.stdout)
    assert stats["graphs"] == 4 and stats["total_nodes"]["noun_chunk"] > 0

    run("train", *args, "--dim", "8", "--layers", "1", "--epochs", "2", "--batch", "2", "--out", tmp / "emb_run")
    ev = json.loads(run("eval", *args, "--checkpoint", tmp / "emb_run" / "model.gqa", "--json").stdout)
    assert ev["examples"] == 2

    # wrong dimension on one record
    lines = emb.read_text().splitlines()
    rec = json.loads(lines[-1])
    rec["vector"] = rec["vector"][:3]
    lines[-1] = json.dumps(rec)
    emb.write_text("\n".join(lines) + "\n")
    run("stats", *args, expect=1)


@case
def gradcheck():
    out = json.loads(run("gradcheck", "--json").stdout)
    assert out["pass"] and out["max_rel_error"] < 1e-4 and out["graph_nodes"] == 6, out
    run("gradcheck", "--seed", "3")


@case
def synth_files():
    d = synth("chunk", train=10, test=4, seed=2)
    assert {f.name for f in d.iterdir()} == {"kg.jsonl", "train.jsonl", "test.jsonl", "lexicon.jsonl"}
    assert len((d / "train.jsonl").read_text().splitlines()) == 10
    e = synth("path", train=10, test=4, seed=2)
    assert not (e / "lexicon.jsonl").exists()
    run("synth", "--task", "nope", "--out", tmp / "nope", expect=2)


shutil.rmtree(tmp, ignore_errors=True)
print(f"{len(failures)} failed" if failures else "all cli checks passed")
sys.exit(1 if failures else 0)
