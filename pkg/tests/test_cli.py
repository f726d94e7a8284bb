"""End-to-end drive of every CLI subcommand on a small generated corpus."""

from __future__ import annotations

import json
import random
from datetime import date, timedelta

import pytest

from mediagraph.cli import main

PEOPLE = {
    "Narendra Modi": "POL",
    "Amit Shah": "POL",
    "Rahul Gandhi": "POL",
    "Rakesh Tikait": "PERSON",
    "Yogendra Yadav": "POL",
    "Narendra Singh Tomar": "POL",
    "Greta Thunberg": "PERSON",
    "Rihanna": "PERSON",
    "Priyanka Gandhi": "POL",
    "Akshay Kumar": "PERSON",
    "Darshan Pal": "PERSON",
    "Balbir Singh Rajewala": "PERSON",
    "Bharat Kisan Union": "ORG",
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = random.Random(5)
    names = list(PEOPLE)

    with open(root / "gazetteer.csv", "w") as fh:
        fh.write("name,aliases,type\n")
        for name, typ in PEOPLE.items():
            aliases = [name]
            if name == "Narendra Singh Tomar":
                aliases.append("Narendra Tomar")
            fh.write(f'{name},{"|".join(aliases)},{typ}\n')

    topics = ["farm laws", "farmers protest", "cricket match"]
    with open(root / "corpus.jsonl", "w") as fh:
        for i in range(100):
            day = date(2021, 1, 1) + timedelta(days=rng.randrange(360))
            mentioned = rng.sample(names, rng.choice([2, 2, 3, 3, 4]))
            topic = topics[0] if i % 4 else topics[2]
            filler = " ".join(f"w{j}" for j in range(150))
            fh.write(
                json.dumps(
                    {
                        "article_id": f"art{i:03d}",
                        "source": "DEMO",
                        "publish_date": day.isoformat(),
                        "title": f"{mentioned[0]} speaks on {topic}",
                        "text": f"The {topic} continued as " + " met ".join(mentioned) + " " + filler,
                    }
                )
                + "\n"
            )
    (root / "keyphrases.txt").write_text("farm laws\nfarmers protest\n")
    return root


def test_ingest(workdir):
    assert main([
        "ingest",
        "--corpus", str(workdir / "corpus.jsonl"),
        "--gazetteer", str(workdir / "gazetteer.csv"),
        "--keyphrases", str(workdir / "keyphrases.txt"),
        "--truncate", "100",
        "--out", str(workdir / "ingested.jsonl"),
    ]) == 0
    rows = [json.loads(l) for l in open(workdir / "ingested.jsonl")]
    assert rows and all(len(r["text"].split()) <= 100 for r in rows)
    assert all("cricket" not in r["title"] for r in rows)


def test_resolve(workdir):
    assert main([
        "resolve",
        "--mentions", str(workdir / "ingested.jsonl"),
        "--gazetteer", str(workdir / "gazetteer.csv"),
        "--out", str(workdir / "clusters.jsonl"),
    ]) == 0
    clusters = [json.loads(l) for l in open(workdir / "clusters.jsonl")]
    assert any(c["type"] == "ORG" for c in clusters)


def test_er_eval(workdir, capsys):
    with open(workdir / "ann.csv", "w") as fh:
        fh.write("cluster_id,member,valid\n")
        for i, line in enumerate(open(workdir / "clusters.jsonl")):
            for member in json.loads(line)["aliases"]:
                fh.write(f"{i},{member},1\n")
    assert main([
        "er-eval",
        "--clusters", str(workdir / "clusters.jsonl"),
        "--annotations", str(workdir / "ann.csv"),
        "--fn", "3", "--tp", "97",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["fmp"] == 0.03
    assert payload["accuracy_pct"] == 100.0


def test_build_and_stats(workdir, capsys):
    assert main([
        "build",
        "--resolved", str(workdir / "clusters.jsonl"),
        "--corpus", str(workdir / "ingested.jsonl"),
        "--person-only",
        "--out", str(workdir / "graph.json"),
    ]) == 0
    assert main(["stats", str(workdir / "graph.json")]) == 0
    out = capsys.readouterr().out
    assert "density:" in out
    graph = json.loads((workdir / "graph.json").read_text())
    assert all(n["type"] != "ORG" for n in graph["nodes"])


def test_analyze(workdir):
    assert main([
        "analyze", str(workdir / "graph.json"),
        "--top", "5", "--communities", "2", "--leaders", "3",
        "--out", str(workdir / "report.csv"),
    ]) == 0
    lines = (workdir / "report.csv").read_text().strip().splitlines()
    assert lines[0] == "axis,community,rank,entity,score"
    axes = {line.split(",")[0] for line in lines[1:]}
    assert {"weighted_degree", "betweenness", "eigenvector"} <= axes


def test_embed_and_train(workdir):
    assert main([
        "embed", str(workdir / "graph.json"),
        "--dim", "12", "--walk-length", "8", "--walks", "4", "--window", "3",
        "--seed", "7", "--out", str(workdir / "emb.json"),
    ]) == 0
    assert main([
        "train",
        "--graph", str(workdir / "graph.json"),
        "--features", str(workdir / "emb.json"),
        "--mode", "supervised", "--seed", "7",
        "--out", str(workdir / "model.json"),
    ]) == 0
    model = json.loads((workdir / "model.json").read_text())
    assert model["kind"] == "supervised"


def test_experiment(workdir):
    (workdir / "exp.toml").write_text(
        f"""
outlet = "DEMO"
graph = "{workdir / 'graph.json'}"
seed = 7

[split]
regimes = ["one_time"]
train_end = "2021-09-30"
val_end = "2021-10-31"
test_end = "2021-12-31"

[features]
dim = 12
walk_length = 8
walks_per_node = 4
window = 3
experiments = ["1A"]

[model]
layers = 1
hidden_dim = 12
epochs = 30
patience = 8

[thresholds]
min_weights = [1]
"""
    )
    assert main([
        "experiment",
        "--config", str(workdir / "exp.toml"),
        "--out", str(workdir / "expreport.csv"),
    ]) == 0
    lines = (workdir / "expreport.csv").read_text().strip().splitlines()
    assert len(lines) == 2
    assert (workdir / "expreport.csv.meta.json").exists()


def test_baseline(workdir, capsys):
    assert main([
        "baseline",
        "--graph", str(workdir / "graph.json"),
        "--mode", "random", "--iterations", "20", "--seed", "3",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0.0 <= payload["accuracy"] <= 1.0

    assert main([
        "baseline",
        "--graph", str(workdir / "graph.json"),
        "--mode", "community", "--all-pairs",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["universe"] == "all_pairs"
