"""Method A: effect catalog, comment stripping, tainting, soundness harness."""

from __future__ import annotations

import os

import pytest

from enclawed.formal.effects import EffectSet
from enclawed.formal.skills import SkillManifest, write_skill_md
from enclawed.formal.static_scan import analyze_scripts, scan_script, strip_comments


def make_skill(tmp_path, caps, files: dict[str, str]):
    write_skill_md(tmp_path, SkillManifest(name="fixture", caps=tuple(caps)))
    for name, content in files.items():
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content)
    return tmp_path


# ground-truth fixtures: (family, source, expected effects or "top")
FIXTURES = [
    ("shell", "curl https://x.example/data\n", {"net.egress"}),
    ("shell", "wget -O out.bin https://x/  # fetch\n", {"net.egress", "fs.write.rev"}),
    ("shell", "rm -rf /tmp/scratch\n", {"fs.write.irrev"}),
    ("shell", "cat /etc/hosts\n", {"fs.read"}),
    ("shell", "echo hi > result.txt\n", {"fs.write.rev"}),
    ("shell", "eval \"$UNTRUSTED\"\n", "top"),
    ("shell", "# curl inside a comment only\necho ok\n", set()),
    ("python", "import requests\nrequests.get(url)\n", {"net.egress"}),
    ("python", "data = open('f.txt').read()\n", {"fs.read"}),
    ("python", "open('f.txt', 'w').write(x)\n", {"fs.write.rev"}),
    ("python", "import os\nos.remove(path)\n", {"fs.write.irrev"}),
    ("python", "import subprocess\nsubprocess.run(cmd)\n", {"spawn.proc"}),
    ("python", "eval(user_input)\n", "top"),
    ("python", "# eval( only in a comment\nx = 1\n", set()),
    ("python", "s = 'not a # comment'  # but eval( here is one\n", set()),
    ("node", "await fetch('https://x.example');\n", {"net.egress"}),
    ("node", "fs.writeFileSync('out', data);\n", {"fs.write.rev"}),
    ("node", "fs.unlinkSync(p);\n", {"fs.write.irrev"}),
    ("node", "const { spawn } = require('child_process'); spawn('ls');\n", {"spawn.proc"}),
    ("node", "eval(code);\n", "top"),
    ("node", "await import(moduleName);\n", "top"),
    ("node", "// fetch( in a comment\nlet x = 1;\n", set()),
    ("node", "/* fetch(\n   spans lines */\nlet x = 1;\n", set()),
    ("typed", "const r = await fetch(url); fs.readFileSync(p);\n", {"net.egress", "fs.read"}),
]


@pytest.mark.parametrize("family,source,expected", FIXTURES)
def test_catalog_matches_ground_truth(family, source, expected):
    effects = scan_script(family, source)
    if expected == "top":
        assert effects.top
    else:
        assert not effects.top
        assert effects.tokens == frozenset(expected)


@pytest.mark.parametrize("family,source,expected", FIXTURES)
def test_soundness_never_misses_ground_truth(family, source, expected):
    """Over-approximation: the computed set is a superset of ground truth."""
    effects = scan_script(family, source)
    if expected == "top":
        assert effects.top
    else:
        assert effects.top or frozenset(expected) <= effects.tokens


def test_grep_oracle_curl_maps_to_net_egress(tmp_path):
    """Independent check: every fixture script containing a bare curl token
    (outside comments) is reported with net.egress."""
    skill = make_skill(
        tmp_path,
        ["net.egress"],
        {"fetch.sh": "curl https://api.internal/v1\n", "clean.sh": "echo no network\n"},
    )
    verdict = analyze_scripts(skill)
    grep_hits = {
        name
        for name, content in (("fetch.sh", "curl ..."), ("clean.sh", "echo"))
        if "curl" in content
    }
    static_hits = {
        name
        for name, effects in verdict.per_script.items()
        if not effects.top and "net.egress" in effects.tokens
    }
    assert static_hits == grep_hits == {"fetch.sh"}


def test_contained_verdict_subset(tmp_path):
    skill = make_skill(tmp_path, ["fs.read"], {"reader.py": "data = open('f.txt').read()\n"})
    verdict = analyze_scripts(skill)
    assert verdict.contained is True
    assert verdict.union.tokens == frozenset({"fs.read"})


def test_not_contained_when_effects_exceed_declaration(tmp_path):
    skill = make_skill(tmp_path, ["fs.read"], {"fetcher.sh": "curl https://x/\n"})
    verdict = analyze_scripts(skill)
    assert verdict.contained is False


def test_reflective_taints_to_top_and_never_contained(tmp_path):
    skill = make_skill(
        tmp_path,
        list(EffectSet.top_element().tokens) or ["fs.read"],
        {"dynamic.py": "eval(input())\n"},
    )
    verdict = analyze_scripts(skill)
    assert verdict.union.top
    assert verdict.contained is False  # top is contained in nothing


def test_unreadable_script_is_top(tmp_path):
    skill = make_skill(tmp_path, ["fs.read"], {})
    bad = tmp_path / "binary.py"
    bad.write_bytes(b"\xff\xfe\x00\x01 invalid utf-8 \xff")
    verdict = analyze_scripts(skill)
    assert verdict.per_script["binary.py"].top
    assert verdict.contained is False


def test_non_script_files_ignored(tmp_path):
    skill = make_skill(
        tmp_path, ["fs.read"], {"data.json": '{"curl": "not code"}', "readme.txt": "curl docs"}
    )
    verdict = analyze_scripts(skill)
    assert set(verdict.per_script) == set()
    assert verdict.contained is True


def test_subdirectory_scripts_walked(tmp_path):
    skill = make_skill(tmp_path, ["spawn.proc"], {os.path.join("lib", "run.py"): "import subprocess\n"})
    verdict = analyze_scripts(skill)
    assert set(verdict.per_script) == {os.path.join("lib", "run.py")}


def test_comment_stripping_string_awareness():
    assert "eval" in strip_comments("python", "x = 'eval( in string'\n")
    assert "eval" not in strip_comments("python", "x = 1  # eval( in comment\n")
    assert "fetch" in strip_comments("node", "const u = 'fetch(' // but this fetch( goes\n").split("//")[0]
    # unterminated quote: ambiguous, keep the line (sound)
    assert "eval" in strip_comments("python", "x = 'unterminated # eval(\n")


def test_block_comment_stripping_across_lines():
    source = "let a = 1;\n/* begin\n fetch('x')\n end */\nlet b = 2;\n"
    stripped = strip_comments("node", source)
    assert "fetch" not in stripped
    assert "let a" in stripped and "let b" in stripped


def test_verdict_digests_cover_sources(tmp_path):
    skill = make_skill(tmp_path, ["fs.read"], {"a.py": "x = open('f').read()\n"})
    first = analyze_scripts(skill).to_json_dict()
    (tmp_path / "a.py").write_text("y = open('g').read()\n")
    second = analyze_scripts(skill).to_json_dict()
    assert first["scriptDigests"] != second["scriptDigests"]
    assert first["union"] == second["union"]  # same effects, different bytes
